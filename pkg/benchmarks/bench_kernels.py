"""Time the compiled and pure-Python RK4 kernels on the same workloads.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from sqcir._backend import get_kernels
from sqcir.integrator import IntegratorConfig, time_grid
from sqcir.io import PRESETS, default_initial
from sqcir.model import NetworkParams, NetworkState, as_params_vector, region_param_arrays


def _reduced_case():
    p = PRESETS["table1"]
    times = time_grid(IntegratorConfig(0.0, 300.0, 0.01))
    eps = np.full(times.size - 1, p.epsilon0)
    args = (default_initial(p).as_array(), np.array(as_params_vector(p)), times, eps)
    return "single region, 300 days, h=0.01", "rk4_reduced", args


def _network_case(k=8):
    p = PRESETS["table1"]
    rng = np.random.default_rng(0)
    t = rng.uniform(0.0, 0.05, (k, k))
    np.fill_diagonal(t, 0.0)
    net = NetworkParams(t, (p,) * k)
    init = NetworkState((default_initial(p),) * k)
    times = time_grid(IntegratorConfig(0.0, 100.0, 0.01))
    eps = np.full(times.size - 1, p.epsilon0)
    args = (init.as_array(), region_param_arrays(net), net.t_matrix, times, eps)
    return f"{k} regions, 100 days, h=0.01", "rk4_network", args


def best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        compiled = get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    python = get_kernels("python")
    print(f"{'workload':36s} {'python s':>10s} {'cython s':>10s} {'speedup':>9s}  identical")
    for label, name, call_args in (_reduced_case(), _network_case()):
        t_py, out_py = best_of(getattr(python, name), call_args, args.repeat)
        t_cy, out_cy = best_of(getattr(compiled, name), call_args, args.repeat)
        same = np.array_equal(np.asarray(out_py[0]), np.asarray(out_cy[0]))
        print(f"{label:36s} {t_py:10.3f} {t_cy:10.4f} {t_py / t_cy:8.0f}x  {same}")


if __name__ == "__main__":
    main()
