"""Command-line interface: ``sqcir <subcommand> --config PATH [options]``.

Exit status is 0 on success, 1 on usage or configuration errors and 2 on
runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytics, fitting, mob
from .errors import ConfigError, SQCIRError
from .integrator import integrate, integrate_network
from .io import (
    build_report,
    config_from_dict,
    load_config,
    load_series,
    write_report,
    write_series,
    write_table,
    write_trajectory,
)
from .model import KEY_TO_ATTR, PARAM_KEYS

log = logging.getLogger("sqcir")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _load(args):
    if args.config is None:
        return config_from_dict({"preset": "table1"})
    return load_config(args.config)


def _mob_schedule(cfg):
    if cfg.mob is None:
        return None
    span = cfg.integrator.tf - cfg.integrator.t0
    m = mob.sample_mob_process(cfg.mob, span, cfg.integrator.t0)
    return mob.epsilon_schedule(cfg.params, m)


def cmd_simulate(args):
    cfg = _load(args)
    schedule = _mob_schedule(cfg)
    if cfg.network is not None:
        traj = integrate_network(cfg.network_initial, cfg.network, cfg.integrator, schedule)
    else:
        traj = integrate(cfg.initial, cfg.params, cfg.integrator, schedule)
    write_trajectory(traj, args.out)


def _safe(fn, *a):
    try:
        return fn(*a).to_dict()
    except SQCIRError as exc:
        return {"error": str(exc)}


def cmd_analyze(args):
    cfg = _load(args)
    p = cfg.params
    body = {
        "equilibrium": analytics.equilibrium_report(p).to_dict(),
        "stability": analytics.classify_stability(p).to_dict(),
        "thresholds": _safe(analytics.critical_thresholds, p),
        "sensitivity": _safe(analytics.sensitivity_indices, p),
    }
    write_report(build_report("analyze", cfg, body), args.out)


def cmd_sweep(args):
    cfg = _load(args)
    key = PARAM_KEYS.get(args.param, args.param)
    if key not in KEY_TO_ATTR:
        raise UsageError(f"--param must be one of {sorted(KEY_TO_ATTR)}, got {args.param!r}")
    current = getattr(cfg.params, KEY_TO_ATTR[key])
    lo = 0.0 if args.lo is None else args.lo
    hi = 2.0 * current if args.hi is None else args.hi
    table = analytics.bifurcation_sweep(
        cfg.params, cfg.initial, lo, hi, args.steps, cfg.integrator, param=key, workers=args.workers
    )
    rows = [(r.value, r.r0_paper, r.long_run_c, r.long_run_i, str(r.persisted).lower(), r.error or "")
            for r in table.rows]
    write_table([key, "r0_paper", "long_run_c", "long_run_i", "persisted", "error"], rows, args.out)


def cmd_mc(args):
    cfg = _load(args)
    mob_cfg = cfg.mob or mob.MobProcessConfig()
    if args.seed is not None:
        mob_cfg = replace(mob_cfg, seed=args.seed)
    cfg = replace(cfg, mob=mob_cfg)
    report = mob.run_ensemble(cfg.initial, cfg.params, mob_cfg, cfg.integrator, args.runs,
                              workers=args.workers)
    write_report(build_report("mc", cfg, report.to_dict(), seed=mob_cfg.seed), args.out)
    if args.out and args.out != "-":
        out = Path(args.out)
        rows = []
        for r, m in enumerate(report.per_run):
            vals = [float("nan")] * 5 if m is None else [getattr(m, n) for n in mob.METRIC_NAMES]
            rows.append([r, report.seeds[r], report.event_counts[r]] + vals)
        write_table(["run", "seed", "events", *mob.METRIC_NAMES], rows,
                    out.with_name(out.stem + "_runs.csv"))


def cmd_fit(args):
    cfg = _load(args)
    if args.data is None:
        raise UsageError("fit requires --data PATH")
    series = load_series(args.data)
    settings = cfg.fit
    if args.free is not None:
        settings = replace(settings, free=tuple(s.strip() for s in args.free.split(",") if s.strip()))
    if args.seed is not None:
        settings = replace(settings, seed=args.seed)
    try:
        fitcfg = fitting.FitConfig(
            free=settings.free, fixed=cfg.params, initial_state=cfg.initial, bounds=settings.bounds,
            n_starts=settings.n_starts, max_evals=settings.max_evals,
            tolerance=settings.tolerance, seed=settings.seed,
        )
    except SQCIRError as exc:
        raise ConfigError(f"invalid fit settings: {exc}") from None
    settings = replace(settings, free=fitcfg.free, bounds=fitcfg.bounds)
    icfg = cfg.integrator
    t_max = float(series.times.max())
    if t_max > icfg.tf:
        icfg = icfg.with_horizon(tf=t_max)
    cfg = replace(cfg, fit=settings, integrator=icfg)
    result = fitting.fit(series, fitcfg, icfg)
    body = {
        "result": result.to_dict(),
        "data": str(args.data),
        "n_observations": len(series),
        "incidence_definition": "cumulative inflow to I: integral of delta*C*I dt",
    }
    write_report(build_report("fit", cfg, body, seed=settings.seed), args.out)


def cmd_gen_data(args):
    cfg = _load(args)
    icfg = cfg.integrator
    n = args.steps if args.steps is not None else int(round(icfg.tf - icfg.t0))
    if n < 1:
        raise UsageError("--steps must be >= 1")
    times = icfg.t0 + np.arange(1, n + 1, dtype=float)
    icfg = icfg.with_horizon(tf=float(times[-1]))
    series = fitting.generate_synthetic(
        cfg.params, cfg.initial, times, args.noise, 0 if args.seed is None else args.seed, icfg
    )
    write_series(series, args.out)


COMMANDS = {
    "simulate": (cmd_simulate, "integrate the model and write a trajectory CSV"),
    "analyze": (cmd_analyze, "equilibria, R0, stability, thresholds and sensitivity as JSON"),
    "sweep": (cmd_sweep, "bifurcation sweep over one parameter, CSV"),
    "mc": (cmd_mc, "Monte Carlo mob-event ensemble, JSON (+ per-run CSV next to --out)"),
    "fit": (cmd_fit, "least-squares fit to a cumulative-incidence CSV, JSON"),
    "gen-data": (cmd_gen_data, "synthetic cumulative-incidence series, CSV"),
}


def build_parser():
    parser = _Parser(prog="sqcir", description="SQCIR mob-propagation model toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration (default: preset table1)")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        if name == "sweep":
            p.add_argument("--param", default="epsilon", metavar="NAME")
            p.add_argument("--from", dest="lo", type=float, metavar="X")
            p.add_argument("--to", dest="hi", type=float, metavar="Y")
            p.add_argument("--steps", type=int, default=40, metavar="N")
        if name in ("sweep", "mc"):
            p.add_argument("--workers", type=int, default=1, metavar="N")
        if name == "mc":
            p.add_argument("--runs", type=int, default=20, metavar="N")
        if name in ("mc", "fit", "gen-data"):
            p.add_argument("--seed", type=int, metavar="N")
        if name == "fit":
            p.add_argument("--data", metavar="PATH")
            p.add_argument("--free", metavar="LIST", help="comma-separated parameter names")
        if name == "gen-data":
            p.add_argument("--noise", type=float, default=0.0, metavar="SD")
            p.add_argument("--steps", type=int, metavar="N", help="number of daily points")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command][0](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"sqcir: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # reader closed stdout early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (SQCIRError, OSError) as exc:
        print(f"sqcir: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
