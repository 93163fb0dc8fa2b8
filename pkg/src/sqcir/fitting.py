"""Least-squares estimation of model parameters from cumulative incidence.

Model incidence is the running integral of the inflow δ·C·I into the
infected compartment. Parameters are fitted by multi-start Nelder-Mead
with a penalty outside the box bounds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression, minimize

from .errors import FitFailureError, InvalidInputError, InvalidParameterError, SQCIRError
from .integrator import IntegratorConfig, integrate
from .model import KEY_TO_ATTR, PARAM_KEYS, ModelParams, StateVector
from .rng import SplitMix64

log = logging.getLogger(__name__)

PENALTY = 1e12
INITIAL_SIMPLEX_FRACTION = 0.1

DEFAULT_BOUNDS = {
    "lambda": (0.01, 50.0),
    "alpha": (1e-4, 1.0),
    "epsilon": (1e-4, 1.0),
    "delta": (1e-4, 1.0),
    "mu": (1e-4, 1.0),
    "nu": (1e-4, 1.0),
    "phi": (1e-4, 0.5),
}


class UndefinedMetricError(InvalidInputError):
    """Relative error requested against an all-zero prediction."""

    def __init__(self, message, mae):
        super().__init__(message)
        self.mae = mae


@dataclass(frozen=True)
class ObservedSeries:
    times: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        y = np.asarray(self.cumulative, dtype=float).ravel()
        if t.shape != y.shape:
            raise InvalidInputError(f"times and cumulative differ in length: {t.size} vs {y.size}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise InvalidInputError("series contains non-finite values")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InvalidInputError("observation times must be strictly increasing")
        if np.any(y < 0):
            raise InvalidInputError("cumulative counts must be >= 0")
        if y.size > 1 and np.any(np.diff(y) < 0):
            j = int(np.argmax(np.diff(y) < 0)) + 1
            raise InvalidInputError(f"cumulative counts decrease at index {j}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "cumulative", y)

    def __len__(self):
        return self.times.size


def _normalize_name(name):
    key = PARAM_KEYS.get(name, name)
    if key not in KEY_TO_ATTR:
        raise InvalidInputError(f"unknown parameter {name!r}; choose from {sorted(KEY_TO_ATTR)}")
    return key


@dataclass(frozen=True)
class FitConfig:
    """What to fit and how.

    ``free`` names use file-style keys (``epsilon``, ``lambda``, ...);
    ``fixed`` supplies every other parameter value. ``tolerance`` bounds
    the final simplex diameter in the max-norm.
    """

    free: tuple
    fixed: ModelParams
    initial_state: StateVector
    bounds: dict = field(default_factory=dict)
    n_starts: int = 4
    max_evals: int = 5000
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        free = tuple(_normalize_name(n) for n in self.free)
        if not free:
            raise InvalidInputError("at least one free parameter is required")
        if len(set(free)) != len(free):
            raise InvalidInputError(f"duplicate free parameters: {free}")
        bounds = {}
        for name in free:
            lo, hi = self.bounds.get(name, self.bounds.get(KEY_TO_ATTR[name], DEFAULT_BOUNDS[name]))
            lo, hi = float(lo), float(hi)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise InvalidInputError(f"bounds for {name} must be finite with lo < hi, got {(lo, hi)}")
            bounds[name] = (lo, hi)
        if self.n_starts < 1 or self.max_evals < 1 or not self.tolerance > 0:
            raise InvalidInputError("n_starts, max_evals and tolerance must be positive")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "bounds", bounds)

    def lower(self):
        return np.array([self.bounds[n][0] for n in self.free])

    def upper(self):
        return np.array([self.bounds[n][1] for n in self.free])

    def assemble(self, theta):
        return self.fixed.replace(**{name: float(v) for name, v in zip(self.free, theta)})

    def to_dict(self):
        return {
            "free": list(self.free),
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "fixed": self.fixed.to_dict(),
            "initial_state": self.initial_state.to_dict(),
            "n_starts": self.n_starts,
            "max_evals": self.max_evals,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FitResult:
    theta: dict
    objective: float
    e_rel: float
    mae: float
    n_evals: int
    converged: bool
    params: ModelParams
    best_start: int
    start_objectives: tuple

    def to_dict(self):
        return {
            "theta": dict(self.theta),
            "objective": self.objective,
            "e_rel": self.e_rel,
            "mae": self.mae,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "params": self.params.to_dict(),
            "best_start": self.best_start,
            "start_objectives": list(self.start_objectives),
        }


def model_cumulative_incidence(params: ModelParams, initial: StateVector, times,
                               cfg: IntegratorConfig) -> np.ndarray:
    """Trapezoidal integral of δ·C·I from cfg.t0, sampled at ``times``.

    Integration stops at the last observation time; observation times are
    inserted into the RK4 grid so each sample lands on a grid point.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros(0)
    if times.min() < cfg.t0 or times.max() > cfg.tf:
        raise InvalidInputError(
            f"observation times must lie in [{cfg.t0}, {cfg.tf}], got [{times.min()}, {times.max()}]"
        )
    t_end = float(times.max())
    if t_end <= cfg.t0:
        return np.zeros(times.size)
    span = t_end - cfg.t0
    run_cfg = IntegratorConfig(cfg.t0, t_end, min(cfg.h, span), cfg.method)
    traj = integrate(initial, params, run_cfg, extra_times=times)
    grid = traj.times
    flux = params.delta * traj.states[:, 2] * traj.states[:, 3]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (flux[1:] + flux[:-1]) * np.diff(grid))))
    idx = np.clip(np.searchsorted(grid, times), 1, grid.size - 1)
    nearer_left = np.abs(grid[idx - 1] - times) <= np.abs(grid[idx] - times)
    idx = np.where(nearer_left, idx - 1, idx)
    return cum[idx]


def error_metrics(observed, predicted):
    """Return ``(e_rel, mae)``: ||obs - pred||_2 / ||pred||_2 and ||obs - pred||_1 / n."""
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if observed.shape != predicted.shape or observed.size == 0:
        raise InvalidInputError("observed and predicted must be non-empty and equally long")
    diff = observed - predicted
    mae = float(np.sum(np.abs(diff)) / diff.size)
    norm = float(np.linalg.norm(predicted))
    if norm == 0:
        raise UndefinedMetricError("relative error undefined for an all-zero prediction", mae)
    return float(np.linalg.norm(diff) / norm), mae


def _bound_violation(theta, lo, hi):
    below = np.minimum(theta - lo, 0.0)
    above = np.maximum(theta - hi, 0.0)
    return float(np.sum(below ** 2) + np.sum(above ** 2))


def sse_objective(theta, observed: ObservedSeries, fitcfg: FitConfig, icfg: IntegratorConfig) -> float:
    """Sum of squared residuals; out of bounds or failed runs return a large penalty."""
    theta = np.asarray(theta, dtype=float)
    violation = _bound_violation(theta, fitcfg.lower(), fitcfg.upper())
    if violation > 0 or not np.all(np.isfinite(theta)):
        return PENALTY + (violation if math.isfinite(violation) else PENALTY)
    try:
        params = fitcfg.assemble(theta)
        predicted = model_cumulative_incidence(params, fitcfg.initial_state, observed.times, icfg)
    except (SQCIRError, InvalidParameterError) as exc:
        log.debug("objective penalised at theta=%s: %s", theta, exc)
        return PENALTY
    sse = float(np.sum((observed.cumulative - predicted) ** 2))
    if not math.isfinite(sse):
        log.debug("objective non-finite at theta=%s", theta)
        return PENALTY
    return sse


def _initial_simplex(x0, lo, hi):
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for j in range(n):
        step = INITIAL_SIMPLEX_FRACTION * (hi[j] - lo[j])
        simplex[j + 1, j] = x0[j] + step if x0[j] + step <= hi[j] else x0[j] - step
    return simplex


def fit(observed: ObservedSeries, fitcfg: FitConfig, icfg: IntegratorConfig) -> FitResult:
    """Multi-start Nelder-Mead; the lowest objective wins, ties to the earliest start."""
    if len(observed) == 0:
        raise InvalidInputError("observed series is empty")
    lo, hi = fitcfg.lower(), fitcfg.upper()
    rng = SplitMix64(fitcfg.seed)
    starts = [lo + (hi - lo) * np.array([rng.uniform() for _ in fitcfg.free])
              for _ in range(fitcfg.n_starts)]

    def objective(x):
        return sse_objective(x, observed, fitcfg, icfg)

    best = None
    total_evals = 0
    start_objectives = []
    for k, x0 in enumerate(starts):
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": fitcfg.max_evals,
                "maxiter": 10 * fitcfg.max_evals,
                # max-norm distance to the best vertex <= tol/2 bounds the diameter by tol
                "xatol": 0.5 * fitcfg.tolerance,
                "fatol": np.inf,
                "initial_simplex": _initial_simplex(x0, lo, hi),
                "adaptive": False,
            },
        )
        total_evals += int(res.nfev)
        start_objectives.append(float(res.fun))
        if best is None or res.fun < best[1].fun:
            best = (k, res)
    k, res = best
    theta = np.asarray(res.x, dtype=float)
    params = fitcfg.assemble(np.clip(theta, lo, hi))
    if not res.fun < PENALTY:
        raise FitFailureError(
            f"all {fitcfg.n_starts} starts failed; best objective {res.fun:.3e}",
            best={"theta": dict(zip(fitcfg.free, theta.tolist())), "objective": float(res.fun)},
        )
    predicted = model_cumulative_incidence(params, fitcfg.initial_state, observed.times, icfg)
    try:
        e_rel, mae = error_metrics(observed.cumulative, predicted)
    except UndefinedMetricError as exc:
        e_rel, mae = float("nan"), exc.mae
    return FitResult(
        theta=dict(zip(fitcfg.free, theta.tolist())),
        objective=float(res.fun),
        e_rel=e_rel,
        mae=mae,
        n_evals=total_evals,
        converged=bool(res.status == 0),
        params=params,
        best_start=k,
        start_objectives=tuple(start_objectives),
    )


def generate_synthetic(params: ModelParams, initial: StateVector, times, noise_sd: float = 0.0,
                       seed: int = 0, cfg: IntegratorConfig | None = None) -> ObservedSeries:
    """Model cumulative incidence plus seeded Gaussian noise, projected to nondecreasing and >= 0."""
    if noise_sd < 0:
        raise InvalidInputError("noise_sd must be >= 0")
    times = np.asarray(times, dtype=float)
    if cfg is None:
        t0 = min(0.0, float(times.min()))
        cfg = IntegratorConfig(t0, max(float(times.max()), t0 + 0.01), 0.01)
    clean = model_cumulative_incidence(params, initial, times, cfg)
    if noise_sd == 0:
        return ObservedSeries(times, clean)
    rng = SplitMix64(seed)
    noisy = clean + noise_sd * np.array([rng.normal() for _ in range(times.size)])
    # least-squares projection onto nondecreasing sequences; a running max would bias upward
    noisy = np.maximum(isotonic_regression(noisy).x, 0.0)
    noisy = np.maximum.accumulate(noisy)  # guards last-ulp ties from the projection
    return ObservedSeries(times, noisy)
