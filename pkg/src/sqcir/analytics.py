"""Closed-form analysis of the SQCIR system plus numeric cross-checks.

Reproduction numbers, equilibria, the Jacobian and its spectrum at the
mob-free equilibrium, critical thresholds, elasticities of R0, and a
parameter sweep for bifurcation diagrams.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._util import trapezoid

from . import _kernels_py
from .errors import (
    ConvergenceError,
    DegenerateParameterError,
    InvalidInputError,
    InvalidParameterError,
    SQCIRError,
)
from .integrator import IntegratorConfig, integrate
from .model import ModelParams, StateVector, PARAM_KEYS, KEY_TO_ATTR

PERSISTENCE_THRESHOLD = 1e-3
LONG_RUN_FRACTION = 0.1
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 200
NEWTON_MAX_HALVINGS = 40


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class EquilibriumReport:
    mfe: StateVector
    endemic_closed: StateVector | None
    endemic_closed_feasible: bool
    endemic_numeric: StateVector | None
    endemic_numeric_feasible: bool
    endemic_residual: float
    newton_iterations: int
    notes: tuple = ()

    def to_dict(self):
        def sv(x):
            return None if x is None else x.to_dict()

        return {
            "mfe": sv(self.mfe),
            "endemic_closed": sv(self.endemic_closed),
            "endemic_closed_feasible": self.endemic_closed_feasible,
            "endemic_numeric": sv(self.endemic_numeric),
            "endemic_numeric_feasible": self.endemic_numeric_feasible,
            "endemic_residual": self.endemic_residual,
            "newton_iterations": self.newton_iterations,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class StabilityReport:
    r0_paper: float
    r0_ngm: float
    eigenvalues_mfe: tuple
    classification: str
    criterion_agreement: bool

    def to_dict(self):
        d = asdict(self)
        d["eigenvalues_mfe"] = list(self.eigenvalues_mfe)
        return d


@dataclass(frozen=True)
class ThresholdReport:
    epsilon_c: float
    lambda_c: float
    phi_c: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SensitivityReport:
    pi_lambda: float
    pi_epsilon: float
    pi_phi: float
    pi_nu: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SweepRow:
    value: float
    r0_paper: float
    long_run_c: float
    long_run_i: float
    persisted: bool
    error: str | None = None


@dataclass(frozen=True)
class BifurcationTable:
    param: str
    rows: tuple = field(default_factory=tuple)

    @property
    def values(self):
        return np.array([r.value for r in self.rows])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


@dataclass(frozen=True)
class RootResult:
    state: StateVector
    iterations: int
    residual: float


# ------------------------------------------------------ reproduction numbers

def r0_paper(params: ModelParams) -> float:
    """R0 = Λε/(Φ(Φ+ν))."""
    denom = params.phi * (params.phi + params.nu)
    if denom == 0:
        raise InvalidParameterError("Φ(Φ+ν) is zero; R0 undefined")
    return params.lam * params.epsilon0 / denom


def r0_next_generation(params: ModelParams) -> float:
    """Spectral radius of F·V⁻¹ built from the contacted/infected block.

    F carries new contacts Λε/Φ entering C; V holds the exits Φ+μ from C
    and Φ+ν from I. Note this gives Λε/(Φ(Φ+μ)), which differs from
    :func:`r0_paper` whenever μ ≠ ν.
    """
    p = params
    F = np.array([[p.lam * p.epsilon0 / p.phi, 0.0], [0.0, 0.0]])
    V = np.array([[p.phi + p.mu, 0.0], [0.0, p.phi + p.nu]])
    if np.linalg.det(V) == 0:
        raise InvalidParameterError("V is singular")
    K = F @ np.linalg.inv(V)
    return float(np.max(np.abs(np.linalg.eigvals(K))))


def effective_r(params: ModelParams, m: float) -> float:
    """R0 with the contact rate scaled to ε0(1+m)."""
    if m < 0:
        raise InvalidInputError(f"mob intensity must be >= 0, got {m}")
    return r0_paper(params.replace(epsilon0=params.epsilon0 * (1.0 + m)))


# ---------------------------------------------------------------- equilibria

def mob_free_equilibrium(params: ModelParams) -> StateVector:
    return StateVector(params.lam / params.phi, 0.0, 0.0, 0.0, 0.0)


def _residual_vec(y, params, eps=None):
    p = params
    e = p.epsilon0 if eps is None else eps
    return np.array(_kernels_py.rhs_reduced(*y, p.lam, p.alpha, e, p.delta, p.mu, p.nu, p.phi))


def equilibrium_residual(state: StateVector, params: ModelParams) -> float:
    """Max-abs right-hand side at ``state`` with ε = ε0."""
    return float(np.max(np.abs(_residual_vec(list(state), params))))


def is_feasible(state: StateVector, params: ModelParams, rtol=1e-9) -> bool:
    """Nonnegative and within Σ up to rounding in the total."""
    vals = list(state)
    if not all(math.isfinite(v) for v in vals) or any(v < 0 for v in vals):
        return False
    n = sum(vals)
    return 0 < n <= params.carrying_value * (1 + rtol)


def endemic_equilibrium_closed(params: ModelParams) -> StateVector:
    """Interior equilibrium from the steady-state conditions.

    S* and C* come from dQ/dt = dI/dt = 0, Q* from dS/dt = 0,
    I* = (ε(S*+Q*) - μ - Φ)/δ from dC/dt = 0 and R* = (μC* + νI*)/Φ from
    dR/dt = 0. Components may be negative; check :func:`is_feasible`.
    """
    p = params
    e, a, d = p.epsilon0, p.alpha, p.delta
    with np.errstate(all="ignore"):
        try:
            g = e * (p.nu + p.phi) + d * p.phi
            s = g / (a * d)
            q = p.lam * d / g - e * (p.nu + p.phi) / (a * d) - p.phi / a
            c = (p.nu + p.phi) / d
            i = (e * (s + q) - p.mu - p.phi) / d
            r = (p.mu * c + p.nu * i) / p.phi
        except ZeroDivisionError:
            raise DegenerateParameterError(
                "endemic equilibrium undefined: alpha, delta and ε(ν+Φ)+δΦ must be nonzero"
            )
    vals = (s, q, c, i, r)
    if not all(math.isfinite(v) for v in vals):
        raise DegenerateParameterError(f"endemic equilibrium is non-finite: {vals}")
    return StateVector(*vals)


def jacobian(state: StateVector, params: ModelParams, epsilon_t: float | None = None) -> np.ndarray:
    """Analytic 5x5 Jacobian of the single-region right-hand side."""
    S, Q, C, I, R = state
    p = params
    e = p.epsilon0 if epsilon_t is None else epsilon_t
    a, d, mu, nu, phi = p.alpha, p.delta, p.mu, p.nu, p.phi
    return np.array([
        [-C * e - phi - Q * a, -S * a, -S * e, 0.0, 0.0],
        [Q * a, -C * e - phi + S * a, -Q * e, 0.0, 0.0],
        [C * e, C * e, -I * d - phi + Q * e + S * e - mu, -C * d, 0.0],
        [0.0, 0.0, I * d, C * d - phi - nu, 0.0],
        [0.0, 0.0, mu, nu, -phi],
    ])


def find_equilibrium(params: ModelParams, guess: StateVector, tol=NEWTON_TOL,
                     max_iter=NEWTON_MAX_ITER) -> RootResult:
    """Damped Newton on the five steady-state equations.

    Each iteration halves the step (up to 40 times) until the max-abs
    residual decreases. Components of the root may be negative.
    """
    y = np.array(list(guess), dtype=float)
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("guess must be finite")
    f = _residual_vec(y, params)
    res = float(np.max(np.abs(f)))
    for it in range(max_iter + 1):
        if res <= tol:
            return RootResult(StateVector(*y), it, res)
        if it == max_iter:
            break
        J = jacobian(StateVector(*y), params)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            raise DegenerateParameterError(
                f"singular Jacobian after {it} Newton iterations (residual {res:.3e})"
            )
        if not np.all(np.isfinite(dx)):
            raise DegenerateParameterError(f"non-finite Newton step after {it} iterations")
        lam = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            y_new = y + lam * dx
            f_new = _residual_vec(y_new, params)
            res_new = float(np.max(np.abs(f_new)))
            if res_new < res:
                break
            lam *= 0.5
        if not math.isfinite(res_new):
            break
        y, f, res = y_new, f_new, res_new
    raise ConvergenceError(
        f"Newton did not converge in {max_iter} iterations; last residual {res:.3e}",
        residual=res,
        iterations=max_iter,
    )


def endemic_equilibrium_numeric(params: ModelParams, guess: StateVector) -> StateVector:
    return find_equilibrium(params, guess).state


def equilibrium_report(params: ModelParams) -> EquilibriumReport:
    mfe = mob_free_equilibrium(params)
    notes = []
    try:
        closed = endemic_equilibrium_closed(params)
    except DegenerateParameterError as exc:
        closed = None
        notes.append(f"closed form: {exc}")
    guess = closed if closed is not None else StateVector(mfe.s * 0.5, 1.0, 1.0, 1.0, 1.0)
    try:
        root = find_equilibrium(params, guess)
        numeric, residual, iters = root.state, root.residual, root.iterations
    except SQCIRError as exc:
        numeric, residual, iters = None, float("nan"), -1
        notes.append(f"numeric root: {exc}")
    return EquilibriumReport(
        mfe=mfe,
        endemic_closed=closed,
        endemic_closed_feasible=closed is not None and is_feasible(closed, params),
        endemic_numeric=numeric,
        endemic_numeric_feasible=numeric is not None and is_feasible(numeric, params),
        endemic_residual=residual,
        newton_iterations=iters,
        notes=tuple(notes),
    )


# ------------------------------------------------------------------ stability

def eigenvalues_at_mfe(params: ModelParams) -> np.ndarray:
    """Closed-form spectrum of the Jacobian at the mob-free equilibrium."""
    p = params
    phi = p.phi
    return np.array([
        -phi,
        -phi,
        (p.lam * p.alpha - phi ** 2) / phi,
        (p.lam * p.epsilon0 - phi ** 2 - phi * p.mu) / phi,
        -phi - p.nu,
    ])


def classify_stability(params: ModelParams) -> StabilityReport:
    """Stability of the mob-free equilibrium from the sign of its spectrum.

    ``criterion_agreement`` records whether the R0 < 1 rule gives the same
    verdict; it need not, since the quarantine eigenvalue (Λα-Φ²)/Φ does
    not enter R0.
    """
    eig = eigenvalues_at_mfe(params)
    stable = bool(np.max(eig) < 0)
    r0 = r0_paper(params)
    return StabilityReport(
        r0_paper=r0,
        r0_ngm=r0_next_generation(params),
        eigenvalues_mfe=tuple(float(v) for v in eig),
        classification="stable" if stable else "unstable",
        criterion_agreement=(r0 < 1) == stable,
    )


# ----------------------------------------------------------------- thresholds

def critical_thresholds(params: ModelParams) -> ThresholdReport:
    p = params
    if p.lam <= 0 or p.epsilon0 <= 0:
        raise InvalidParameterError("critical thresholds need lambda > 0 and epsilon > 0")
    base = p.phi * (p.phi + p.nu)
    prod = p.epsilon0 * p.lam
    # positive root of Φ² + νΦ - ε0Λ = 0, in cancellation-free form
    phi_c = 2.0 * prod / (p.nu + math.sqrt(p.nu * p.nu + 4.0 * prod))
    return ThresholdReport(epsilon_c=base / p.lam, lambda_c=base / p.epsilon0, phi_c=phi_c)


def sensitivity_indices(params: ModelParams) -> SensitivityReport:
    """Elasticities (dR0/dρ)(ρ/R0) of :func:`r0_paper`."""
    p = params
    s = p.phi + p.nu
    if p.phi <= 0 or s <= 0:
        raise InvalidParameterError("need phi > 0")
    return SensitivityReport(
        pi_lambda=1.0,
        pi_epsilon=1.0,
        pi_phi=-(2.0 * p.phi + p.nu) / s,
        pi_nu=-p.nu / s,
    )


# ------------------------------------------------------------------- sweeping

def window_mean(times, values, t_start):
    """Trapezoidal time-average of ``values`` over [t_start, times[-1]]."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_end = times[-1]
    if t_start >= t_end:
        return float(values[-1])
    j = int(np.searchsorted(times, t_start, side="right"))
    v_start = np.interp(t_start, times, values)
    t = np.concatenate(([t_start], times[j:]))
    v = np.concatenate(([v_start], values[j:]))
    return float(trapezoid(v, t) / (t_end - t_start))


def _sweep_point(params, initial, cfg, param, value, threshold):
    p = params.replace(**{param: value})
    r0 = r0_paper(p)
    try:
        traj = integrate(initial, p, cfg)
    except SQCIRError as exc:
        return SweepRow(value, r0, float("nan"), float("nan"), False, str(exc))
    t_start = cfg.tf - LONG_RUN_FRACTION * (cfg.tf - cfg.t0)
    c = window_mean(traj.times, traj.component("c"), t_start)
    i = window_mean(traj.times, traj.component("i"), t_start)
    return SweepRow(value, r0, c, i, bool(i > threshold))


def bifurcation_sweep(params: ModelParams, initial: StateVector, eps_lo: float, eps_hi: float,
                      n_steps: int, cfg: IntegratorConfig, param="epsilon",
                      threshold=PERSISTENCE_THRESHOLD, workers=1) -> BifurcationTable:
    """Long-run C and I over an evenly spaced grid of one parameter.

    The long-run value is the time average over the final 10% of the
    horizon. Failed integrations are recorded in the row's ``error``.
    With ``workers > 1`` grid points run on a thread pool (the compiled
    kernel releases the GIL); rows stay ordered by value.
    """
    key = PARAM_KEYS.get(param, param)
    if key not in KEY_TO_ATTR:
        raise InvalidInputError(f"unknown parameter {param!r}")
    if not (0 <= eps_lo < eps_hi):
        raise InvalidInputError(f"need 0 <= lo < hi, got lo={eps_lo}, hi={eps_hi}")
    if n_steps < 2:
        raise InvalidInputError("n_steps must be >= 2")
    grid = np.linspace(eps_lo, eps_hi, int(n_steps))
    attr = KEY_TO_ATTR[key]

    def point(v):
        return _sweep_point(params, initial, cfg, attr, float(v), threshold)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, grid))
    else:
        rows = [point(v) for v in grid]
    return BifurcationTable(key, tuple(rows))
