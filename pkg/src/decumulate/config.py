"""JSON run configuration, CSV export and the consumption-rate calibration.

A config file looks like::

    {
      "market":    {"r": 0.005, "pi": 0.025, "sigma_pi": 0.0185, "mu_M": 0.095, "sigma_M": 0.16},
      "mortality": {"lambda": 0.051, "lambda_eln": 0.034, "lambda_floor": 0.010, "sigma_hat": 0.064},
      "loading":   {"sharpe": 0.2, "pool_size": 5000, "variance_basis": "individual_cost"},
      "plan":      {"c": 0.04, "nu": 0.2, "W0": 595000, "beta": 0.0},
      "grid":      {"w_points": 200, "w_max": 1.25, "phi_points": 200},
      "appetite":  {"b_min": 0.5, "b_max": 20, "b_points": 20,
                    "psi_min": 0.05, "psi_max": 0.5, "psi_points": 20},
      "seed": 20240601,
      "lambda_samples": 200,
      "threads": 1
    }

Every section and key is optional; unknown keys are rejected.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annuity import LoadingPolicy, VarianceBasis
from .lifetimes import LambdaSamples, MortalityParams, sample_lambdas
from .market import MarketParams, max_weight
from .optimizer import CellSurfaces, DecisionMap, GridSpec
from .params import ModelParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AreInput:
    """ASFA annual retirement expenditure for ages 67-84 and 85+, and initial wealth."""

    are_67_84: float
    are_85plus: float
    w0_wealth: float

    def __post_init__(self):
        if min(self.are_67_84, self.are_85plus, self.w0_wealth) <= 0:
            raise ValueError("expenditures and wealth must be positive")


def weighted_expenditure(a: AreInput) -> float:
    """Two-thirds weight on the 67-84 band, one third on 85+."""
    return (2.0 * a.are_67_84 + a.are_85plus) / 3.0


def consumption_rate(a: AreInput) -> float:
    return weighted_expenditure(a) / a.w0_wealth


@dataclass(frozen=True)
class PlanConfig:
    c: float = 0.052
    nu: float = 0.2
    W0: float = 595_000.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 <= self.nu < 1:
            raise ValueError("nu must lie in [0, 1)")
        if self.W0 <= 0 or self.beta < 0:
            raise ValueError("need W0 > 0 and beta >= 0")


@dataclass(frozen=True)
class GridConfig:
    w_points: int = 200
    w_max: float = 1.25
    phi_points: int = 200


@dataclass(frozen=True)
class AppetiteConfig:
    b_min: float = 0.5
    b_max: float = 20.0
    b_points: int = 20
    psi_min: float = 0.05
    psi_max: float = 0.5
    psi_points: int = 20

    def __post_init__(self):
        if self.b_min < 0 or self.b_max < self.b_min or self.b_points < 1:
            raise ValueError("bad b range")
        if not 0 <= self.psi_min <= self.psi_max <= 1 or self.psi_points < 1:
            raise ValueError("bad psi range")

    @property
    def b_grid(self) -> np.ndarray:
        return np.linspace(self.b_min, self.b_max, self.b_points)

    @property
    def psi_grid(self) -> np.ndarray:
        return np.linspace(self.psi_min, self.psi_max, self.psi_points)


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams = field(default_factory=MarketParams)
    mortality: MortalityParams = field(default_factory=MortalityParams)
    loading: LoadingPolicy = field(default_factory=LoadingPolicy)
    plan: PlanConfig = field(default_factory=PlanConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    appetite: AppetiteConfig = field(default_factory=AppetiteConfig)
    seed: int = 20240601
    lambda_samples: int = 200
    threads: int = 1

    def __post_init__(self):
        if self.lambda_samples < 1 or self.threads < 1:
            raise ValueError("lambda_samples and threads must be at least 1")
        cap = max_weight(self.market, self.mortality.lam)
        if self.grid.w_max > cap:
            raise ValueError(f"grid.w_max={self.grid.w_max} exceeds min(w0, w1)={cap:.6f}")

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.market, self.mortality, self.loading, self.plan.c)

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid.w_points, self.grid.w_max, self.grid.phi_points, self.plan.c)

    def lambdas(self) -> LambdaSamples:
        return sample_lambdas(self.mortality, self.lambda_samples, self.seed)

    def replace(self, **sections) -> "RunConfig":
        return dataclasses.replace(self, **sections)


# JSON uses "lambda" where Python needs "lam"
_RENAMES = {MortalityParams: {"lambda": "lam"}}
_SECTIONS = {
    "market": MarketParams,
    "mortality": MortalityParams,
    "loading": LoadingPolicy,
    "plan": PlanConfig,
    "grid": GridConfig,
    "appetite": AppetiteConfig,
}
_SCALARS = {"seed": int, "lambda_samples": int, "threads": int}


def _build(cls, raw, where):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    renames = _RENAMES.get(cls, {})
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        attr = renames.get(key, key)
        if attr not in names or key in renames.values():
            raise ConfigError(f"{where}: unknown key {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"{where}.{key}: expected a number or string, got {value!r}")
        kwargs[attr] = value
    for f in names.values():
        if f.name in kwargs and f.type in ("int", int) and kwargs[f.name] != int(kwargs[f.name]):
            raise ConfigError(f"{where}.{f.name}: expected an integer")
        if f.name in kwargs and f.type in ("int", int):
            kwargs[f.name] = int(kwargs[f.name])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        elif key in _SCALARS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key}: expected an integer")
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown top-level key {key!r}")
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for key, cls in _SECTIONS.items():
        section = getattr(cfg, key)
        inv = {v: k for k, v in _RENAMES.get(cls, {}).items()}
        d = {}
        for f in dataclasses.fields(cls):
            v = getattr(section, f.name)
            if isinstance(v, VarianceBasis):
                v = v.value
            d[inv.get(f.name, f.name)] = v
        out[key] = d
    for key in _SCALARS:
        out[key] = getattr(cfg, key)
    return out


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(raw)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=False) + "\n"


# --------------------------------------------------------------------------
# CSV output

GRID_COLUMNS = ["vehicle", "w", "phi", "mean", "second_moment", "variance", "shortfall_prob", "feasible"]
MAP_COLUMNS = ["b", "psi", "vehicle", "w", "phi", "q_star", "feasible"]
ORACLE_COLUMNS = ["quantity", "closed_form", "mc_estimate", "std_error", "z_score"]


def fmt(x) -> str:
    """Shortest round-trip float text; fixed so golden files stay byte-stable."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x != x:
        return "nan"
    return repr(x)


def _write(rows, columns, out) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def grid_rows(surfaces: CellSurfaces):
    for i, w in enumerate(surfaces.w):
        for j, phi in enumerate(surfaces.phi):
            yield (
                surfaces.vehicle.value, w, phi, surfaces.mean[i, j], surfaces.second_moment[i, j],
                surfaces.variance[i, j], surfaces.shortfall_prob[i, j], bool(surfaces.admissible[i, j]),
            )


def write_grid_csv(surfaces, out=None) -> str:
    """Cell surfaces as ``grid.csv``; ``feasible`` flags admissible cells."""
    if isinstance(surfaces, CellSurfaces):
        surfaces = [surfaces]
    rows = [r for s in surfaces for r in grid_rows(s)]
    return _write(rows, GRID_COLUMNS, out)


def write_map_csv(dmap: DecisionMap, out=None) -> str:
    rows = []
    for b, psi, o in dmap.rows():
        rows.append((b, psi, o.label, o.w, o.phi, o.q_star if o.feasible else float("nan"), o.feasible))
    return _write(rows, MAP_COLUMNS, out)


def write_oracle_csv(rows, out=None) -> str:
    return _write(rows, ORACLE_COLUMNS, out)
