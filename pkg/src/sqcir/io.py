"""Configuration loading, presets and CSV/JSON serialization."""
from __future__ import annotations

import csv
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInputError, InvalidParameterError
from .fitting import ObservedSeries
from .integrator import IntegratorConfig, Trajectory
from .mob import MobProcessConfig
from .model import COMPARTMENTS, ModelParams, NetworkParams, NetworkState, StateVector

__version__ = "0.1.0"

PRESETS = {
    "table1": ModelParams(lam=4.0, alpha=0.14, epsilon0=0.03, delta=0.10, mu=0.10, nu=0.05, phi=0.01),
    "fig-sim": ModelParams(lam=2.0, alpha=0.14, epsilon0=0.26, delta=0.10, mu=0.10, nu=0.05, phi=0.0074),
    "fig-peak": ModelParams(lam=4.0, alpha=0.14, epsilon0=0.26, delta=0.10, mu=0.10, nu=0.05, phi=0.0074),
}

TOP_KEYS = {"preset", "params", "initial", "integrator", "mob", "network", "fit"}
INTEGRATOR_KEYS = {"t0", "tf", "h", "method"}
MOB_KEYS = {"arrival_rate", "amplitude_lo", "amplitude_hi", "event_duration", "seed"}
NETWORK_KEYS = {"k", "t_matrix", "per_region", "initial"}
FIT_KEYS = {"free", "bounds", "n_starts", "max_evals", "tolerance", "seed"}
PARAM_FILE_KEYS = {"lambda", "alpha", "epsilon", "delta", "mu", "nu", "phi"}

TRAJECTORY_HEADER = ["t", "S", "Q", "C", "I", "R", "epsilon"]
SERIES_HEADER = ["t", "cumulative"]


def default_initial(params: ModelParams) -> StateVector:
    """(Λ/Φ - 3, 1, 1, 1, 0): three seeded individuals below the carrying value."""
    return StateVector(params.lam / params.phi - 3.0, 1.0, 1.0, 1.0, 0.0)


@dataclass(frozen=True)
class FitSettings:
    free: tuple = ("epsilon",)
    bounds: dict = field(default_factory=dict)
    n_starts: int = 4
    max_evals: int = 5000
    tolerance: float = 1e-8
    seed: int = 0

    def to_dict(self):
        return {
            "free": list(self.free),
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "n_starts": self.n_starts,
            "max_evals": self.max_evals,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    initial: StateVector
    integrator: IntegratorConfig
    mob: MobProcessConfig | None = None
    network: NetworkParams | None = None
    network_initial: NetworkState | None = None
    preset: str | None = None
    fit: FitSettings = field(default_factory=FitSettings)

    def to_dict(self):
        """Effective configuration in file schema; reloading it reproduces this config."""
        d = {
            "preset": self.preset,
            "params": self.params.to_dict(),
            "initial": self.initial.to_dict(),
            "integrator": self.integrator.to_dict(),
            "mob": None if self.mob is None else self.mob.to_dict(),
            "fit": self.fit.to_dict(),
        }
        if self.network is not None:
            d["network"] = {
                "k": self.network.k,
                "t_matrix": self.network.t_matrix.tolist(),
                "per_region": [p.to_dict() for p in self.network.per_region],
                "initial": [r.to_dict() for r in self.network_initial.regions],
            }
        return {k: v for k, v in d.items() if v is not None}


# ------------------------------------------------------------------ loading

def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown field(s): {', '.join(prefix + k for k in unknown)}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return value


def _params_from(base: ModelParams | None, overrides, where):
    _check_keys(overrides, PARAM_FILE_KEYS, where)
    merged = {} if base is None else base.to_dict()
    for k, v in overrides.items():
        merged[k] = _number(v, f"{where}.{k}")
    missing = sorted(PARAM_FILE_KEYS - set(merged))
    if missing:
        raise ConfigError(f"missing parameter(s) {', '.join(f'{where}.{m}' for m in missing)} (no preset given)")
    try:
        return ModelParams.from_dict(merged)
    except InvalidParameterError as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


def _state_from(base: StateVector, overrides, where):
    _check_keys(overrides, set(COMPARTMENTS), where)
    d = base.to_dict()
    for k, v in overrides.items():
        d[k] = _number(v, f"{where}.{k}")
    state = StateVector.from_dict(d)
    for k, v in state.to_dict().items():
        if not math.isfinite(v) or v < 0:
            raise ConfigError(f"invalid {where}.{k}: compartments must be finite and >= 0, got {v}")
    return state


def config_from_dict(raw) -> RunConfig:
    """Expand the preset, apply overrides and validate every section."""
    _check_keys(raw, TOP_KEYS, "")
    preset = raw.get("preset")
    base = None
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]
    params = _params_from(base, raw.get("params", {}), "params")
    initial = _state_from(default_initial(params), raw.get("initial", {}), "initial")

    integ = raw.get("integrator", {})
    _check_keys(integ, INTEGRATOR_KEYS, "integrator")
    idict = IntegratorConfig().to_dict()
    idict.update(integ)
    for k in ("t0", "tf", "h"):
        _number(idict[k], f"integrator.{k}")
    try:
        integrator = IntegratorConfig(**idict)
    except InvalidInputError as exc:
        raise ConfigError(f"invalid integrator: {exc}") from None

    mob = None
    if raw.get("mob") is not None:
        _check_keys(raw["mob"], MOB_KEYS, "mob")
        try:
            mob = MobProcessConfig(**raw["mob"])
        except (InvalidInputError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid mob: {exc}") from None

    network = network_initial = None
    if raw.get("network") is not None:
        network, network_initial = _network_from(raw["network"], params, initial)

    fit = FitSettings()
    if raw.get("fit") is not None:
        _check_keys(raw["fit"], FIT_KEYS, "fit")
        fd = dict(raw["fit"])
        if "free" in fd:
            fd["free"] = tuple(fd["free"])
        if "bounds" in fd:
            _check_keys(fd["bounds"], PARAM_FILE_KEYS, "fit.bounds")
            fd["bounds"] = {k: tuple(v) for k, v in fd["bounds"].items()}
        fit = FitSettings(**fd)
    return RunConfig(params, initial, integrator, mob, network, network_initial, preset, fit)


def _network_from(raw, params, initial):
    _check_keys(raw, NETWORK_KEYS, "network")
    if "k" not in raw or "t_matrix" not in raw:
        raise ConfigError("network requires k and t_matrix")
    k = raw["k"]
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConfigError(f"network.k must be an integer >= 1, got {k!r}")
    per = raw.get("per_region")
    if per is None:
        per = [{}] * k
    if len(per) != k:
        raise ConfigError(f"network.per_region has {len(per)} entries, expected k={k}")
    regions = tuple(_params_from(params, o, f"network.per_region[{j}]") for j, o in enumerate(per))
    inits = raw.get("initial")
    if inits is None:
        states = tuple(default_initial(p) for p in regions)
    else:
        if len(inits) != k:
            raise ConfigError(f"network.initial has {len(inits)} entries, expected k={k}")
        states = tuple(
            _state_from(default_initial(regions[j]), o, f"network.initial[{j}]") for j, o in enumerate(inits)
        )
    try:
        net = NetworkParams(np.asarray(raw["t_matrix"], dtype=float), regions)
    except (InvalidInputError, ValueError) as exc:
        raise ConfigError(f"invalid network: {exc}") from None
    return net, NetworkState(states)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_series(path) -> ObservedSeries:
    """Read a ``t,cumulative`` CSV; row numbers in errors count the header as row 1."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read series {path}: {exc.strerror}") from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise ConfigError(f"{path}: empty input")
    header = [c.strip() for c in rows[0]]
    if header != SERIES_HEADER:
        raise ConfigError(f"{path}: expected header 't,cumulative', got {','.join(rows[0])!r}")
    times, cum = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            if len(row) != 2:
                raise ValueError
            t, c = float(row[0]), float(row[1])
            if not (math.isfinite(t) and math.isfinite(c)):
                raise ValueError
        except ValueError:
            raise ConfigError(f"{path}: malformed row {lineno}: {','.join(row)!r}") from None
        if c < 0:
            raise ConfigError(f"{path}: row {lineno}: cumulative count must be >= 0")
        if times and t <= times[-1]:
            raise ConfigError(f"{path}: row {lineno}: times must be strictly increasing")
        if cum and c < cum[-1]:
            raise ConfigError(f"{path}: row {lineno}: cumulative count decreases ({c} < {cum[-1]})")
        times.append(t)
        cum.append(c)
    if not times:
        raise ConfigError(f"{path}: empty input (header only)")
    return ObservedSeries(np.array(times), np.array(cum))


# ------------------------------------------------------------------ writing

def fmt(x):
    return f"{float(x):.10g}"


@contextmanager
def _open_out(path):
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def write_trajectory(traj: Trajectory, path):
    """CSV with header t,S,Q,C,I,R,epsilon; network runs add a region column after t."""
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if traj.is_network:
            w.writerow(["t", "region"] + TRAJECTORY_HEADER[1:])
            for j, t in enumerate(traj.times):
                for region, row in enumerate(traj.states[j]):
                    w.writerow([fmt(t), region] + [fmt(v) for v in row] + [fmt(traj.epsilon_used[j])])
        else:
            w.writerow(TRAJECTORY_HEADER)
            for j, t in enumerate(traj.times):
                w.writerow([fmt(t)] + [fmt(v) for v in traj.states[j]] + [fmt(traj.epsilon_used[j])])


def read_trajectory(path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(c) for c in r] for r in body])
    if header[:2] == ["t", "region"]:
        k = int(data[:, 1].max()) + 1
        data = data.reshape(-1, k, data.shape[1])
        return Trajectory(data[:, 0, 0], data[:, :, 2:7], data[:, 0, 7])
    if header != TRAJECTORY_HEADER:
        raise ConfigError(f"{path}: unexpected trajectory header {header}")
    return Trajectory(data[:, 0], data[:, 1:6], data[:, 6])


def write_series(series: ObservedSeries, path):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for t, c in zip(series.times, series.cumulative):
            w.writerow([fmt(t), fmt(c)])


def write_table(header, rows, path):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def build_report(kind, config: RunConfig, body: dict, **extra):
    report = {"kind": kind, "version": __version__, "config": config.to_dict()}
    report.update(extra)
    report.update(body)
    return jsonable(report)


def write_report(report, path):
    with _open_out(path) as fh:
        json.dump(jsonable(report), fh, indent=2, allow_nan=False)
        fh.write("\n")
