"""Death and early-liquidity-need hazards, and their calibration.

Lifetimes are exponential: ``T_x ~ Exp(lambda)`` on the projected basis and
``T_x ~ Exp(Lambda)`` given the realised population hazard, where
``Lambda - lambda_floor`` is lognormal with mean ``lambda - lambda_floor``.
The early-liquidity-need time is an independent ``Exp(lambda_eln)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq


class TableFormatError(ValueError):
    """Malformed life-table or care-incidence input."""


@dataclass(frozen=True)
class MortalityParams:
    lam: float = 0.051
    lambda_eln: float = 0.034
    lambda_floor: float = 0.010
    sigma_hat: float = 0.064

    def __post_init__(self):
        if not self.lam > self.lambda_floor >= 0:
            raise ValueError("need lambda > lambda_floor >= 0")
        if self.lambda_eln < 0 or self.sigma_hat < 0:
            raise ValueError("lambda_eln and sigma_hat must be non-negative")


@dataclass(frozen=True)
class LambdaSamples:
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LifeTable:
    """One-year death probabilities from ``start_age`` with improvement factor sets.

    ``improvement`` maps a factor-set name (``"default"``, ``"125y"``, ``"25y"``...)
    to percentage annual improvement rates aligned with ``qx``.
    """

    start_age: int
    qx: np.ndarray
    improvement: dict = field(default_factory=dict)

    def __post_init__(self):
        qx = np.asarray(self.qx, dtype=float)
        if qx.ndim != 1 or len(qx) == 0:
            raise TableFormatError("qx must be a non-empty 1-d sequence")
        if np.any((qx < 0) | (qx > 1)):
            raise TableFormatError("qx values must lie in [0, 1]")
        imp = {k: np.asarray(v, dtype=float) for k, v in self.improvement.items()}
        for k, v in imp.items():
            if v.shape != qx.shape:
                raise TableFormatError(f"improvement set {k!r} has {len(v)} rows, qx has {len(qx)}")
        object.__setattr__(self, "qx", qx)
        object.__setattr__(self, "improvement", imp)

    def factors(self, which: str | None = None) -> np.ndarray:
        if not self.improvement:
            return np.zeros_like(self.qx)
        if which is None:
            which = "default" if "default" in self.improvement else next(iter(self.improvement))
        if which not in self.improvement:
            if "default" in self.improvement:
                return self.improvement["default"]
            raise KeyError(f"no improvement factor set {which!r}; have {sorted(self.improvement)}")
        return self.improvement[which]


def survival(lam: float, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return math.exp(-lam * t)


def lognormal_shape_params(m: MortalityParams) -> tuple[float, float]:
    """Location and shape of ``log(Lambda - lambda_floor)``.

    ``sigma_hat`` is the lognormal shape; the location is chosen so that
    ``E[Lambda] = lambda``.
    """
    mu_ln = math.log(m.lam - m.lambda_floor) - 0.5 * m.sigma_hat**2
    return mu_ln, m.sigma_hat


def sample_lambdas(m: MortalityParams, count: int, seed: int) -> LambdaSamples:
    if count < 1:
        raise ValueError("count must be at least 1")
    if m.sigma_hat == 0:
        return LambdaSamples(np.full(count, m.lam), seed)
    mu_ln, s = lognormal_shape_params(m)
    rng = np.random.default_rng(seed)
    return LambdaSamples(m.lambda_floor + rng.lognormal(mu_ln, s, size=count), seed)


def inverse_hazard_variance(m: MortalityParams, n: int = 1_000_000, seed: int = 0) -> float:
    """Monte Carlo estimate of Var(1/Lambda), the spread of projected life expectancy."""
    lam = sample_lambdas(m, n, seed).values
    return float(np.var(1.0 / lam, ddof=1))


def projected_qx(table: LifeTable, t: int, factor_set: str | None = None) -> float:
    """Death probability in year ``t`` for a life currently at ``start_age``.

    ``q_{x+t} = q^base_{x+t} (1 + f_{x+t}/100)^t``, capped at 1.
    """
    if not 0 <= t < len(table.qx):
        raise IndexError(
            f"age {table.start_age + t} outside table range "
            f"[{table.start_age}, {table.start_age + len(table.qx) - 1}]"
        )
    f = table.factors(factor_set)[t]
    return min(1.0, table.qx[t] * (1.0 + f / 100.0) ** t)


# Half a year is added to the curtate expectancy: deaths are taken to occur
# mid-year on average.  Change HALF_YEAR to 0.0 for the curtate convention.
HALF_YEAR = 0.5


def life_expectancy(table: LifeTable, factor_set: str | None = None, project: bool = True) -> float:
    """Complete expectation of life at ``start_age``.

    Sums the survival probabilities ``k p_x`` for ``k >= 1`` and adds
    ``HALF_YEAR``.  The table must close out with a final ``qx`` of 1; the
    closing age is treated as certain death even after improvement.
    """
    if table.qx[-1] != 1.0:
        raise TableFormatError("life table is not closed: final qx must equal 1")
    if project:
        q = np.array([projected_qx(table, t, factor_set) for t in range(len(table.qx))])
    else:
        q = table.qx.copy()
    q[-1] = 1.0
    kpx = np.cumprod(1.0 - q)
    return float(kpx.sum() + HALF_YEAR)


def fit_lambda(e: float) -> float:
    """Constant hazard with the given life expectancy (exponential mean matching)."""
    if not e > 0:
        raise ValueError("life expectancy must be positive")
    return 1.0 / e


def fit_eln_hazard(times: Sequence[float], proportions: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``exp(-lambda t)`` to observed still-active proportions.

    Returns ``(hazard, r_squared)``; ``r_squared`` is ``nan`` for a single point.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(proportions, dtype=float)
    if t.shape != p.shape or t.ndim != 1 or len(t) == 0:
        raise ValueError("times and proportions must be equal-length 1-d sequences")
    if np.any(t < 0) or np.any((p <= 0) | (p > 1)):
        raise ValueError("need times >= 0 and proportions in (0, 1]")
    if np.all(t == 0):
        raise ValueError("degenerate input: all times are zero")

    def sse(lam):
        return float(np.sum((np.exp(-lam * t) - p) ** 2))

    def grad_sign(lam):
        # sign of dSSE/dlam; stays well determined where SSE itself is flat to rounding
        e = np.exp(-lam * t)
        return float(np.sum(t * e * (p - e)))

    # log-linear least squares through the origin gives the bracket scale
    pos = t > 0
    guess = float(np.sum(-np.log(p[pos]) * t[pos]) / np.sum(t[pos] ** 2))
    hi = max(10.0 * guess, 1.0)
    cands = []
    grid = np.concatenate([[0.0], np.geomspace(guess * 1e-4 + 1e-12, hi, 400)])
    g = np.array([grad_sign(x) for x in grid])
    for k in np.flatnonzero((g[:-1] < 0) & (g[1:] >= 0)):
        cands.append(brentq(grad_sign, grid[k], grid[k + 1], xtol=1e-14, rtol=1e-12))
    # interior stationary points first so exact ties keep them over the bracket ends
    lam = float(min(cands + [0.0, hi], key=sse))
    sst = float(np.sum((p - p.mean()) ** 2))
    r2 = 1.0 - sse(lam) / sst if sst > 0 else math.nan
    return lam, r2


def read_life_table(path: str | Path) -> LifeTable:
    """Read ``age,qx,improvement_pct[...]`` CSV rows, one per integer age.

    Extra columns named ``improvement_pct_<set>`` add alternative factor sets
    (e.g. ``improvement_pct_25y``); plain ``improvement_pct`` is ``"default"``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TableFormatError(f"{path}: empty file") from None
        if header[:2] != ["age", "qx"] or not header[2:] or not all(
            h.startswith("improvement_pct") for h in header[2:]
        ):
            raise TableFormatError(f"{path}: header must be age,qx,improvement_pct[,...], got {header}")
        names = ["default" if h == "improvement_pct" else h[len("improvement_pct_"):] for h in header[2:]]
        ages, qx, imp = [], [], [[] for _ in names]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise TableFormatError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                age = int(row[0])
                q = float(row[1])
                fs = [float(c) for c in row[2:]]
            except ValueError as exc:
                raise TableFormatError(f"{path}: row {lineno}: {exc}") from None
            if not 0 <= q <= 1:
                raise TableFormatError(f"{path}: row {lineno}: qx={q} outside [0, 1]")
            if ages and age != ages[-1] + 1:
                raise TableFormatError(f"{path}: row {lineno}: ages must be consecutive integers")
            ages.append(age)
            qx.append(q)
            for col, f in zip(imp, fs):
                col.append(f)
    if not ages:
        raise TableFormatError(f"{path}: no data rows")
    return LifeTable(ages[0], np.array(qx), dict(zip(names, imp)))


def read_care_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``years_since_67,proportion_active`` CSV into two arrays."""
    times, props = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TableFormatError(f"{path}: empty file") from None
        if header != ["years_since_67", "proportion_active"]:
            raise TableFormatError(f"{path}: header must be years_since_67,proportion_active, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise TableFormatError(f"{path}: row {lineno}: expected 2 fields, got {len(row)}")
            try:
                t, p = float(row[0]), float(row[1])
            except ValueError as exc:
                raise TableFormatError(f"{path}: row {lineno}: {exc}") from None
            if t < 0 or not 0 < p <= 1:
                raise TableFormatError(f"{path}: row {lineno}: need t >= 0 and 0 < p <= 1")
            times.append(t)
            props.append(p)
    if not times:
        raise TableFormatError(f"{path}: no data rows")
    return np.array(times), np.array(props)
