"""Parameter and state types plus the SQCIR right-hand sides.

Compartments are ordered (S, Q, C, I, R) everywhere: susceptible,
quarantined, contacted, infected, recovered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from . import _kernels_py
from .errors import InvalidInputError, InvalidParameterError

COMPARTMENTS = ("s", "q", "c", "i", "r")

# attribute name -> key used in config files and reports
PARAM_KEYS = {
    "lam": "lambda",
    "alpha": "alpha",
    "epsilon0": "epsilon",
    "delta": "delta",
    "mu": "mu",
    "nu": "nu",
    "phi": "phi",
}
KEY_TO_ATTR = {v: k for k, v in PARAM_KEYS.items()}


@dataclass(frozen=True)
class ModelParams:
    """The seven rate constants of the SQCIR system.

    ``lam`` is the recruitment rate and ``epsilon0`` the baseline contact
    rate (the value of the contact rate when no mob event is active).
    """

    lam: float
    alpha: float
    epsilon0: float
    delta: float
    mu: float
    nu: float
    phi: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidParameterError(f"{PARAM_KEYS[f.name]} must be a number, got {value!r}")
            if not math.isfinite(value) or value < 0:
                raise InvalidParameterError(
                    f"{PARAM_KEYS[f.name]} must be finite and >= 0, got {value!r}"
                )
            object.__setattr__(self, f.name, value)
        if self.phi <= 0:
            raise InvalidParameterError(f"phi must be > 0, got {self.phi!r}")

    @classmethod
    def from_dict(cls, d):
        """Build from file-style keys (``lambda``, ``epsilon``, ...)."""
        unknown = set(d) - set(KEY_TO_ATTR)
        if unknown:
            raise InvalidParameterError(f"unknown parameter(s): {sorted(unknown)}")
        missing = set(KEY_TO_ATTR) - set(d)
        if missing:
            raise InvalidParameterError(f"missing parameter(s): {sorted(missing)}")
        return cls(**{KEY_TO_ATTR[k]: v for k, v in d.items()})

    def to_dict(self):
        return {PARAM_KEYS[f.name]: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes):
        """Copy with fields overridden; accepts attribute or file-style keys."""
        d = self.to_dict()
        for key, value in changes.items():
            d[PARAM_KEYS.get(key, key)] = value
        return ModelParams.from_dict(d)

    @property
    def carrying_value(self):
        """Long-run total population Λ/Φ."""
        return self.lam / self.phi


@dataclass(frozen=True)
class StateVector:
    """Compartment occupancies of one region.

    Also used for derivatives, so construction does not enforce
    nonnegativity; see :func:`require_nonnegative`.
    """

    s: float
    q: float
    c: float
    i: float
    r: float

    def __post_init__(self):
        for name in COMPARTMENTS:
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (5,):
            raise InvalidInputError(f"state needs 5 components, got shape {arr.shape}")
        return cls(*arr.tolist())

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(COMPARTMENTS)
        if unknown:
            raise InvalidInputError(f"unknown compartment(s): {sorted(unknown)}")
        return cls(**{k: d.get(k, 0.0) for k in COMPARTMENTS})

    def to_dict(self):
        return {k: getattr(self, k) for k in COMPARTMENTS}

    def as_array(self):
        return np.array([self.s, self.q, self.c, self.i, self.r], dtype=float)

    def __iter__(self):
        return iter((self.s, self.q, self.c, self.i, self.r))

    @property
    def total(self):
        return total_population(self)


@dataclass(frozen=True)
class NetworkParams:
    """Mobility-coupled regions.

    ``t_matrix[i, j]`` is the per-capita rate of leaving region ``i`` for
    region ``j``; the same rate applies to every compartment.
    """

    t_matrix: np.ndarray
    per_region: tuple

    def __post_init__(self):
        per_region = tuple(self.per_region)
        if not per_region:
            raise InvalidInputError("network needs at least one region")
        k = len(per_region)
        t = np.asarray(self.t_matrix, dtype=float)
        if k == 1 and t.size == 0:
            t = np.zeros((1, 1))
        if t.shape != (k, k):
            raise InvalidInputError(f"t_matrix must be {k}x{k}, got shape {t.shape}")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise InvalidInputError("t_matrix entries must be finite and >= 0")
        if np.any(np.diag(t) != 0):
            raise InvalidInputError("t_matrix diagonal must be zero")
        eps = {p.epsilon0 for p in per_region}
        if len(eps) > 1:
            # one ε(t) drives every region
            raise InvalidInputError(f"per-region epsilon must be identical, got {sorted(eps)}")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "t_matrix", t)
        object.__setattr__(self, "per_region", per_region)

    @property
    def k(self):
        return len(self.per_region)

    @classmethod
    def uniform(cls, params: ModelParams, t_matrix):
        t = np.asarray(t_matrix, dtype=float)
        k = max(t.shape[0], 1) if t.ndim == 2 else 1
        return cls(t, (params,) * k)


@dataclass(frozen=True)
class NetworkState:
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 5:
            raise InvalidInputError(f"network state must be (k, 5), got shape {arr.shape}")
        return cls(tuple(StateVector.from_array(row) for row in arr))

    def as_array(self):
        return np.array([r.as_array() for r in self.regions]).reshape(len(self.regions), 5)

    @property
    def k(self):
        return len(self.regions)


def total_population(state: StateVector) -> float:
    return state.s + state.q + state.c + state.i + state.r


def in_invariant_region(state: StateVector, params: ModelParams) -> bool:
    """True iff ``state`` is nonnegative with ``0 < N <= Λ/Φ``."""
    if any(x < 0 for x in state):
        return False
    n = total_population(state)
    return 0 < n <= params.carrying_value


def require_nonnegative(state: StateVector, what="state"):
    values = list(state)
    if not all(math.isfinite(x) for x in values):
        raise InvalidInputError(f"{what} has non-finite components: {values}")
    if any(x < 0 for x in values):
        raise InvalidInputError(f"{what} has negative components: {values}")


def _check_epsilon(epsilon_t):
    if not math.isfinite(epsilon_t) or epsilon_t < 0:
        raise InvalidInputError(f"epsilon_t must be finite and >= 0, got {epsilon_t!r}")


def derivative_reduced(state: StateVector, params: ModelParams, epsilon_t: float) -> StateVector:
    """Right-hand side of the single-region system at contact rate ``epsilon_t``."""
    require_nonnegative(state)
    epsilon_t = float(epsilon_t)
    _check_epsilon(epsilon_t)
    p = params
    return StateVector(
        *_kernels_py.rhs_reduced(
            state.s, state.q, state.c, state.i, state.r,
            p.lam, p.alpha, epsilon_t, p.delta, p.mu, p.nu, p.phi,
        )
    )


def region_param_arrays(net: NetworkParams):
    """Per-region parameter columns in kernel order (lam, alpha, delta, mu, nu, phi)."""
    return tuple(
        np.array([getattr(p, name) for p in net.per_region], dtype=float)
        for name in ("lam", "alpha", "delta", "mu", "nu", "phi")
    )


def derivative_network(state: NetworkState, net: NetworkParams, epsilon_t: float) -> NetworkState:
    """Right-hand side of the mobility-coupled system.

    Every compartment moves with the same rates, so summing any
    compartment's derivative over regions cancels the mobility terms.
    """
    if state.k != net.k:
        raise InvalidInputError(f"state has {state.k} regions, network has {net.k}")
    for idx, region in enumerate(state.regions):
        require_nonnegative(region, f"region {idx}")
    epsilon_t = float(epsilon_t)
    _check_epsilon(epsilon_t)
    y = state.as_array().tolist()
    out = _kernels_py.rhs_network(
        y, region_param_arrays(net), epsilon_t, net.t_matrix.tolist(),
        _kernels_py.row_sums(net.t_matrix.tolist()),
    )
    return NetworkState(tuple(StateVector(*row) for row in out))


def as_params_vector(params: ModelParams) -> Sequence[float]:
    """Kernel-order parameter tuple (lam, alpha, delta, mu, nu, phi)."""
    return (params.lam, params.alpha, params.delta, params.mu, params.nu, params.phi)
