"""Fixed-step RK4 integration of the reduced and networked systems."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._kernels_py import NEGATIVE, NONFINITE, OK
from .errors import DivergenceError, InvalidInputError, StepSizeError
from .model import (
    ModelParams,
    NetworkParams,
    NetworkState,
    StateVector,
    as_params_vector,
    region_param_arrays,
    require_nonnegative,
)
from .schedule import EpsilonSchedule

METHODS = ("rk4",)

# grid points closer than this fraction of h are merged
_MERGE_FRACTION = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    t0: float = 0.0
    tf: float = 300.0
    h: float = 0.01
    method: str = "rk4"

    def __post_init__(self):
        for name in ("t0", "tf", "h"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.tf <= self.t0:
            raise InvalidInputError(f"tf must exceed t0, got t0={self.t0}, tf={self.tf}")
        if self.h <= 0:
            raise InvalidInputError(f"h must be > 0, got {self.h}")
        if self.h > self.tf - self.t0:
            raise InvalidInputError(f"h={self.h} exceeds the horizon {self.tf - self.t0}")
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}; choose from {METHODS}")

    def to_dict(self):
        return {"t0": self.t0, "tf": self.tf, "h": self.h, "method": self.method}

    def with_horizon(self, t0=None, tf=None):
        return IntegratorConfig(
            self.t0 if t0 is None else t0, self.tf if tf is None else tf, self.h, self.method
        )


@dataclass(frozen=True)
class Trajectory:
    """Integration output.

    ``states`` has shape (n, 5) for single-region runs and (n, k, 5) for
    network runs. ``epsilon_used[j]`` is the contact rate applied on the
    step starting at ``times[j]`` (the last entry is ε(tf)).
    """

    times: np.ndarray
    states: np.ndarray
    epsilon_used: np.ndarray

    @property
    def is_network(self):
        return self.states.ndim == 3

    def component(self, name):
        idx = "sqcir".index(name.lower())
        return self.states[..., idx]

    def aggregate(self):
        """Per-compartment sums over regions, shape (n, 5)."""
        return self.states.sum(axis=1) if self.is_network else self.states

    def total_population(self):
        return self.aggregate().sum(axis=-1)

    def state_at(self, j):
        if self.is_network:
            return NetworkState.from_array(self.states[j])
        return StateVector.from_array(self.states[j])

    @property
    def final_state(self):
        return self.state_at(-1)


def time_grid(cfg: IntegratorConfig, extra=()):
    """Regular grid t0, t0+h, ... ending exactly at tf, merged with ``extra`` points.

    The last regular step is shortened when (tf - t0)/h is not integral;
    extra points (schedule breakpoints, observation times) inside the
    horizon split the steps they fall in.
    """
    tol = _MERGE_FRACTION * cfg.h
    span = cfg.tf - cfg.t0
    n_full = int(math.floor(span / cfg.h + 1e-9))
    grid = cfg.t0 + np.arange(n_full + 1) * cfg.h
    if cfg.tf - grid[-1] > tol:
        grid = np.append(grid, cfg.tf)
    else:
        grid[-1] = cfg.tf
    extra = np.asarray([e for e in extra if cfg.t0 + tol < e < cfg.tf - tol], dtype=float)
    if extra.size == 0:
        return grid
    merged = np.union1d(grid, extra)
    keep = np.ones(merged.size, dtype=bool)
    keep[1:] = np.diff(merged) > tol
    return merged[keep]


def _epsilon_along(schedule: EpsilonSchedule, times):
    return np.array([schedule(t) for t in times], dtype=float)


def _raise_for_status(status, step, times):
    if status == OK:
        return
    t = float(times[step])
    if status == NEGATIVE:
        raise StepSizeError(
            f"a compartment went below -1e-12 on the step starting at t={t:g}; "
            "reduce the step size h",
            time=t,
            step=step,
        )
    if status == NONFINITE:
        raise DivergenceError(f"state became non-finite on the step starting at t={t:g}", time=t, step=step)
    raise RuntimeError(f"unknown kernel status {status}")


def _resolve_schedule(schedule, epsilon0):
    if schedule is None:
        return EpsilonSchedule.constant(epsilon0)
    if isinstance(schedule, (int, float)):
        return EpsilonSchedule.constant(schedule)
    return schedule


def integrate(initial: StateVector, params: ModelParams, cfg: IntegratorConfig,
              schedule: EpsilonSchedule | None = None, extra_times=()) -> Trajectory:
    """Integrate the single-region system with RK4.

    ``schedule`` defaults to the constant baseline ε0. Schedule
    breakpoints and ``extra_times`` are inserted into the grid so no step
    straddles a change of ε.
    """
    require_nonnegative(initial, "initial state")
    schedule = _resolve_schedule(schedule, params.epsilon0)
    times = time_grid(cfg, tuple(schedule.breakpoints) + tuple(extra_times))
    eps = _epsilon_along(schedule, times)
    states, status, step = kernels.rk4_reduced(
        initial.as_array(), np.array(as_params_vector(params)), times, eps[:-1]
    )
    _raise_for_status(status, step, times)
    return Trajectory(times, np.asarray(states), eps)


def integrate_network(initial: NetworkState, net: NetworkParams, cfg: IntegratorConfig,
                      schedule: EpsilonSchedule | None = None, extra_times=()) -> Trajectory:
    """Network counterpart of :func:`integrate`; one ε(t) is shared by all regions."""
    if initial.k != net.k:
        raise InvalidInputError(f"initial state has {initial.k} regions, network has {net.k}")
    for idx, region in enumerate(initial.regions):
        require_nonnegative(region, f"initial state of region {idx}")
    schedule = _resolve_schedule(schedule, net.per_region[0].epsilon0)
    times = time_grid(cfg, tuple(schedule.breakpoints) + tuple(extra_times))
    eps = _epsilon_along(schedule, times)
    states, status, step = kernels.rk4_network(
        initial.as_array(), region_param_arrays(net), net.t_matrix, times, eps[:-1]
    )
    _raise_for_status(status, step, times)
    return Trajectory(times, np.asarray(states), eps)


def closed_form_total(n0, params: ModelParams, t):
    """Exact total population Λ/Φ + (n0 - Λ/Φ)·exp(-Φt)."""
    cv = params.lam / params.phi
    return cv + (n0 - cv) * np.exp(-params.phi * np.asarray(t, dtype=float))
