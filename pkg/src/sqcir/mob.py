"""Mob events: the stochastic intensity M(t), the induced contact-rate
schedule ε(t) = ε0(1 + M(t)), Monte Carlo ensembles, and epidemic metrics.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from ._util import trapezoid
from .errors import InvalidInputError, SQCIRError
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import ModelParams, StateVector
from .rng import SplitMix64, derive_seed
from .schedule import EpsilonSchedule, MobIntensity

MAX_AMPLITUDE = 1.5
DEFAULT_DURATION_THRESHOLD = 1.0
METRIC_NAMES = ("peak_infected", "peak_time", "duration", "avg_recovery_rate", "total_infections")


@dataclass(frozen=True)
class MobProcessConfig:
    arrival_rate: float = 0.02
    amplitude_lo: float = 0.0
    amplitude_hi: float = MAX_AMPLITUDE
    event_duration: float = 10.0
    seed: int = 0

    def __post_init__(self):
        for name in ("arrival_rate", "amplitude_lo", "amplitude_hi", "event_duration"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.arrival_rate < 0:
            raise InvalidInputError("arrival_rate must be >= 0")
        if not 0 <= self.amplitude_lo <= self.amplitude_hi <= MAX_AMPLITUDE:
            raise InvalidInputError(
                f"need 0 <= amplitude_lo <= amplitude_hi <= {MAX_AMPLITUDE}, "
                f"got {self.amplitude_lo}, {self.amplitude_hi}"
            )
        if self.event_duration <= 0:
            raise InvalidInputError("event_duration must be > 0")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed:
            raise InvalidInputError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RunMetrics:
    peak_infected: float
    peak_time: float
    duration: float
    avg_recovery_rate: float
    total_infections: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EnsembleReport:
    per_run: tuple            # RunMetrics, or None where the run failed
    errors: tuple             # error message per run, None on success
    seeds: tuple
    event_counts: tuple
    mean: dict
    std: dict
    baseline: RunMetrics

    @property
    def n_runs(self):
        return len(self.per_run)

    def to_dict(self):
        return {
            "n_runs": self.n_runs,
            "baseline": self.baseline.to_dict(),
            "mean": dict(self.mean),
            "std": dict(self.std),
            "per_run": [
                {
                    "run": r,
                    "seed": self.seeds[r],
                    "events": self.event_counts[r],
                    "metrics": None if m is None else m.to_dict(),
                    "error": self.errors[r],
                }
                for r, m in enumerate(self.per_run)
            ],
        }


def sample_mob_process(cfg: MobProcessConfig, horizon: float, t0: float = 0.0) -> MobIntensity:
    """Draw M(t) on [t0, t0 + horizon].

    Event starts form a Poisson process (exponential gaps by inversion);
    each event holds a uniform amplitude in [amplitude_lo, amplitude_hi]
    for ``event_duration``. Overlapping events take the larger amplitude.
    """
    if not horizon > 0:
        raise InvalidInputError("horizon must be > 0")
    end = t0 + horizon
    if cfg.arrival_rate == 0:
        return MobIntensity.constant(0.0)
    rng = SplitMix64(cfg.seed)
    events = []
    t = t0
    width = cfg.amplitude_hi - cfg.amplitude_lo
    while True:
        t += rng.exponential(cfg.arrival_rate)
        if t >= end:
            break
        amp = cfg.amplitude_lo + width * rng.uniform()
        events.append((t, t + cfg.event_duration, amp))
    if not events:
        return MobIntensity.constant(0.0)
    cuts = sorted({x for s, e, _ in events for x in (s, e) if t0 < x < end})
    edges = [t0] + cuts + [end]
    values = []
    for a, b in zip(edges, edges[1:]):
        mid = 0.5 * (a + b)
        values.append(max((amp for s, e, amp in events if s <= mid < e), default=0.0))
    # merge neighbours with equal intensity
    bps, vals = [], [values[0]]
    for cut, v in zip(cuts, values[1:]):
        if v != vals[-1]:
            bps.append(cut)
            vals.append(v)
    return MobIntensity(tuple(bps), tuple(vals))


def count_events(m: MobIntensity) -> int:
    """Number of rises of M(t); overlapping events can merge into one."""
    count = 1 if m.values[0] > 0 else 0
    return count + sum(1 for a, b in zip(m.values, m.values[1:]) if b > a and a == 0)


def epsilon_schedule(params: ModelParams, m: MobIntensity) -> EpsilonSchedule:
    """Pointwise ε0(1 + M(t)) on the breakpoints of ``m``."""
    return EpsilonSchedule(m.breakpoints, tuple(params.epsilon0 * (1.0 + v) for v in m.values))


def _superlevel_segments(times, infected, threshold):
    """Sub-intervals of each grid segment where the linear interpolant of I is >= threshold."""
    for j in range(len(times) - 1):
        ta, tb = times[j], times[j + 1]
        ia, ib = infected[j], infected[j + 1]
        a_in, b_in = ia >= threshold, ib >= threshold
        if a_in and b_in:
            yield j, ta, tb
        elif a_in or b_in:
            tx = ta + (threshold - ia) / (ib - ia) * (tb - ta)
            yield (j, ta, tx) if a_in else (j, tx, tb)


def compute_run_metrics(traj: Trajectory, params: ModelParams,
                        duration_threshold: float = DEFAULT_DURATION_THRESHOLD) -> RunMetrics:
    """Peak infected, epidemic duration, mean recovery inflow and total infections.

    Duration is the measure of {t : I(t) >= threshold} under linear
    interpolation between grid points. The recovery rate is the average
    of μC + νI over that set; total infections integrate δCI over the
    whole run. Network trajectories are summed over regions first.
    """
    if len(traj.times) == 0:
        raise InvalidInputError("empty trajectory")
    agg = traj.aggregate()
    times = traj.times
    C, I = agg[:, 2], agg[:, 3]
    j_peak = int(np.argmax(I))
    peak = float(I[j_peak])
    inflow = params.mu * C + params.nu * I
    duration = 0.0
    recovered = 0.0
    for j, a, b in _superlevel_segments(times, I, duration_threshold):
        ga = np.interp(a, times[j:j + 2], inflow[j:j + 2])
        gb = np.interp(b, times[j:j + 2], inflow[j:j + 2])
        duration += b - a
        recovered += 0.5 * (ga + gb) * (b - a)
    avg = recovered / duration if duration > 0 else 0.0
    total = float(trapezoid(params.delta * C * I, times))
    return RunMetrics(
        peak_infected=peak,
        peak_time=float(times[j_peak]),
        duration=float(duration),
        avg_recovery_rate=float(avg),
        total_infections=total,
    )


def _aggregate(metrics):
    ok = [m for m in metrics if m is not None]
    mean, std = {}, {}
    for name in METRIC_NAMES:
        vals = np.array([getattr(m, name) for m in ok], dtype=float)
        mean[name] = float(vals.mean()) if vals.size else float("nan")
        std[name] = float(vals.std()) if vals.size else float("nan")
    return mean, std


def run_ensemble(initial: StateVector, params: ModelParams, mob: MobProcessConfig,
                 cfg: IntegratorConfig, n_runs: int,
                 duration_threshold: float = DEFAULT_DURATION_THRESHOLD,
                 workers: int = 1) -> EnsembleReport:
    """Monte Carlo runs with independent mob processes plus an M ≡ 0 baseline.

    Run ``r`` draws its process from ``derive_seed(mob.seed, r)``. A failed
    run is recorded with its error message and excluded from mean/std.
    Standard deviations are population (ddof=0) values.
    """
    if n_runs < 1:
        raise InvalidInputError("n_runs must be >= 1")
    baseline = compute_run_metrics(
        integrate(initial, params, cfg, EpsilonSchedule.constant(params.epsilon0)),
        params, duration_threshold,
    )
    seeds = tuple(derive_seed(mob.seed, r) for r in range(n_runs))

    def one(r):
        m = sample_mob_process(replace(mob, seed=seeds[r]), cfg.tf - cfg.t0, cfg.t0)
        try:
            traj = integrate(initial, params, cfg, epsilon_schedule(params, m))
        except SQCIRError as exc:
            return None, str(exc), count_events(m)
        return compute_run_metrics(traj, params, duration_threshold), None, count_events(m)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n_runs)))
    else:
        results = [one(r) for r in range(n_runs)]
    per_run = tuple(r[0] for r in results)
    mean, std = _aggregate(per_run)
    return EnsembleReport(
        per_run=per_run,
        errors=tuple(r[1] for r in results),
        seeds=seeds,
        event_counts=tuple(r[2] for r in results),
        mean=mean,
        std=std,
        baseline=baseline,
    )
