"""Exhaustive grid search for the optimal decumulation strategy.

For each vehicle three surfaces are tabulated over the (w, phi) grid: mean
and second moment of the bequest share, and the liquidity shortfall
probability.  The optimum for a risk appetite ``(b, psi)`` maximises
``mean - b * second_moment`` over cells whose shortfall probability is at
most ``psi``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import annuity
from .annuity import VEHICLE_ORDER, PricingResult, Strategy, Vehicle
from .lifetimes import LambdaSamples
from .market import max_weight, portfolio_law, perpetuity_law
from .outcomes import moment_arrays, probability_from_taus, shortfall_times
from .params import ModelParams

# Q values closer than this (relative) count as ties, so that the
# GSA / pure-drawdown degeneracy resolves by the tie-break and not by rounding.
TIE_RTOL = 1e-12

DRAWDOWN = "drawdown"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class RiskAppetite:
    b: float
    psi: float
    nu: float = 0.2

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("investment risk aversion b must be non-negative")
        if not 0 <= self.psi <= 1:
            raise ValueError("liquidity risk tolerance psi must lie in [0, 1]")
        if not 0 <= self.nu < 1:
            raise ValueError("shortfall threshold nu must lie in [0, 1)")


@dataclass(frozen=True)
class GridSpec:
    w_points: int = 200
    w_max: float = 1.25
    phi_points: int = 200
    c: float = 0.052

    def __post_init__(self):
        if self.w_points < 1 or self.phi_points < 1:
            raise ValueError("grids need at least one point")
        if self.w_max < 0 or self.c <= 0:
            raise ValueError("need w_max >= 0 and c > 0")

    @property
    def w(self) -> np.ndarray:
        return np.linspace(0.0, self.w_max, self.w_points) if self.w_points > 1 else np.array([0.0])

    @property
    def phi(self) -> np.ndarray:
        return np.linspace(0.0, self.c, self.phi_points) if self.phi_points > 1 else np.array([0.0])

    def check(self, params: ModelParams) -> None:
        cap = max_weight(params.market, params.lam)
        if self.w_max > cap:
            raise ValueError(f"w_max={self.w_max} exceeds admissible cap min(w0, w1)={cap:.6f}")
        if not math.isclose(self.c, params.c):
            raise ValueError(f"grid c={self.c} differs from model c={params.c}")


@dataclass(frozen=True)
class CellSurfaces:
    """Surfaces indexed ``[i_w, i_phi]``; masked cells hold NaN."""

    vehicle: Vehicle
    w: np.ndarray
    phi: np.ndarray
    mean: np.ndarray
    second_moment: np.ndarray
    variance: np.ndarray
    shortfall_prob: np.ndarray
    admissible: np.ndarray
    theta: np.ndarray  # loading per w column
    nu: float
    beta: float = 0.0

    @property
    def shape(self):
        return self.mean.shape


@dataclass(frozen=True)
class Optimum:
    vehicle: Vehicle | None
    w: float
    phi: float
    q_star: float
    feasible: bool
    mean: float = math.nan
    second_moment: float = math.nan
    shortfall_prob: float = math.nan

    @property
    def label(self) -> str:
        if not self.feasible:
            return INFEASIBLE
        if self.phi == 0:
            return DRAWDOWN
        return self.vehicle.value


@dataclass(frozen=True)
class AllocationBreakdown:
    pool_premium: float
    market: float
    risk_free: float
    leveraged: bool = False


@dataclass
class DecisionMap:
    b: np.ndarray
    psi: np.ndarray
    optima: list = field(default_factory=list)  # row-major over (b, psi)

    def at(self, i_b: int, i_psi: int) -> Optimum:
        return self.optima[i_b * len(self.psi) + i_psi]

    def labels(self) -> np.ndarray:
        return np.array([o.label for o in self.optima], dtype=object).reshape(len(self.b), len(self.psi))

    def rows(self):
        for i, b in enumerate(self.b):
            for j, psi in enumerate(self.psi):
                yield float(b), float(psi), self.at(i, j)


def column_pricing(vehicle: Vehicle, w: float, phi: np.ndarray, params: ModelParams,
                   lambdas: LambdaSamples | None, beta: float = 0.0):
    """Vectorised pricing of one w column; mirrors ``annuity.price`` exactly."""
    vehicle = Vehicle.parse(vehicle)
    lam = params.lam
    law = portfolio_law(params.market, w)
    u = annuity.provider_discount_rate(vehicle, params.market, law)
    theta0 = annuity.loading(Strategy(vehicle, w, 1.0), params.market, lam, params.loading, lambdas)
    if beta and vehicle.carries_loading:
        theta = annuity.natural_hedge_loading(theta0, beta, u)
    else:
        theta = theta0
    p0 = phi / (lam + u)
    p_theta = (1.0 + theta) * p0
    injection = phi * beta * annuity.death_benefit_epv(lam, u) if beta else np.zeros_like(phi)
    return p_theta + injection, theta


def _evaluate_column(vehicle, w, phi, params, nu, lam_s, lambdas, beta):
    n = len(phi)
    plaw = perpetuity_law(portfolio_law(params.market, w), params.lam)
    if not plaw.degenerate and not plaw.alpha > 2:
        nan = np.full(n, np.nan)
        return nan, nan, nan, nan, np.zeros(n, bool), math.nan
    outlay, theta = column_pricing(vehicle, w, phi, params, lambdas, beta)
    mean, second, var = moment_arrays(vehicle, w, phi, params, outlay, beta)
    mu = portfolio_law(params.market, w).mu
    pay = phi * (1.0 + beta * params.lam)
    start = 1.0 - outlay
    if vehicle.pooled_mortality:
        taus = shortfall_times(start[:, None], params.c, mu, pay[:, None], (lam_s - params.lam)[None, :], nu)
    else:
        taus = np.broadcast_to(shortfall_times(start, params.c, mu, pay, 0.0, nu)[:, None], (n, len(lam_s)))
    prob = probability_from_taus(taus, lam_s, params.mortality.lambda_eln)
    return mean, second, var, prob, outlay < 1.0, theta


def evaluate_surfaces(
    vehicle: Vehicle,
    params: ModelParams,
    grid: GridSpec,
    nu: float,
    lambdas: LambdaSamples,
    beta: float = 0.0,
    threads: int = 1,
) -> CellSurfaces:
    vehicle = Vehicle.parse(vehicle)
    grid.check(params)
    ws, phis = grid.w, grid.phi
    lam_s = np.asarray(lambdas.values, dtype=float)

    def work(w):
        return _evaluate_column(vehicle, float(w), phis, params, nu, lam_s, lambdas, beta)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(work, ws))
    else:
        cols = [work(w) for w in ws]
    mean, second, var, prob, adm, theta = (np.array(x) for x in zip(*cols))
    return CellSurfaces(
        vehicle=vehicle, w=ws, phi=phis, mean=mean, second_moment=second, variance=var,
        shortfall_prob=prob, admissible=adm.astype(bool), theta=theta.astype(float), nu=nu, beta=beta,
    )


def evaluate_all(params, grid, nu, lambdas, beta=0.0, threads=1, vehicles=VEHICLE_ORDER):
    return {Vehicle.parse(v): evaluate_surfaces(v, params, grid, nu, lambdas, beta, threads) for v in vehicles}


def _best_cell(s: CellSurfaces, b: float, psi: float):
    ok = s.admissible & (s.shortfall_prob <= psi)
    if not ok.any():
        return None
    q = np.where(ok, s.mean - b * s.second_moment, -np.inf)
    qmax = q.max()
    tied = q >= qmax - TIE_RTOL * max(1.0, abs(qmax))
    iw, ip = np.nonzero(tied)
    # lower phi first, then lower w
    k = np.lexsort((s.w[iw], s.phi[ip]))[0]
    return float(q[iw[k], ip[k]]), iw[k], ip[k]


def find_optimum(surfaces: CellSurfaces | Iterable[CellSurfaces], appetite: RiskAppetite) -> Optimum:
    """Best feasible cell across one or several vehicles' surfaces.

    Ties (within ``TIE_RTOL``) go to lower phi, then lower w, then the vehicle
    order GSA < ULA < LIA < IIA.
    """
    if isinstance(surfaces, CellSurfaces):
        surfaces = [surfaces]
    elif isinstance(surfaces, dict):
        surfaces = list(surfaces.values())
    cands = []
    for s in surfaces:
        best = _best_cell(s, appetite.b, appetite.psi)
        if best is not None:
            q, iw, ip = best
            cands.append((q, float(s.phi[ip]), float(s.w[iw]), s.vehicle.rank, s, iw, ip))
    if not cands:
        return Optimum(None, math.nan, math.nan, -math.inf, False)
    qmax = max(c[0] for c in cands)
    tied = [c for c in cands if c[0] >= qmax - TIE_RTOL * max(1.0, abs(qmax))]
    q, phi, w, _, s, iw, ip = min(tied, key=lambda c: (c[1], c[2], c[3]))
    return Optimum(
        vehicle=s.vehicle, w=w, phi=phi, q_star=q, feasible=True,
        mean=float(s.mean[iw, ip]), second_moment=float(s.second_moment[iw, ip]),
        shortfall_prob=float(s.shortfall_prob[iw, ip]),
    )


def sweep_appetites(
    surfaces: dict | Sequence[CellSurfaces],
    b_grid: Sequence[float],
    psi_grid: Sequence[float],
    threads: int = 1,
) -> DecisionMap:
    """Global optimum at every (b, psi) pair of the appetite grid."""
    surf = list(surfaces.values()) if isinstance(surfaces, dict) else list(surfaces)
    nu = surf[0].nu
    points = [(float(b), float(p)) for b in b_grid for p in psi_grid]

    def work(bp):
        return find_optimum(surf, RiskAppetite(b=bp[0], psi=bp[1], nu=nu))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            optima = list(pool.map(work, points))
    else:
        optima = [work(p) for p in points]
    return DecisionMap(b=np.asarray(b_grid, float), psi=np.asarray(psi_grid, float), optima=optima)


def wealth_allocation(opt: Optimum, pricing: PricingResult) -> AllocationBreakdown:
    """Split initial wealth into pool premium, market and risk-free holdings.

    For vehicles backed by the risk-free asset the market weight applies to
    wealth left after the premium; for GSA/ULA it applies to total wealth.
    """
    if not opt.feasible:
        raise ValueError("no allocation for an infeasible optimum")
    pool = pricing.outlay if opt.phi > 0 else 0.0
    if opt.phi > 0 and opt.vehicle.risk_free_provider:
        market = opt.w * (1.0 - pool)
    else:
        market = opt.w
    risk_free = 1.0 - pool - market
    return AllocationBreakdown(pool, market, risk_free, leveraged=risk_free < 0)


def optimum_pricing(opt: Optimum, params: ModelParams, lambdas: LambdaSamples | None, beta: float = 0.0):
    return annuity.price(Strategy(opt.vehicle, opt.w, opt.phi, beta), params.market, params.lam,
                         params.loading, lambdas)
