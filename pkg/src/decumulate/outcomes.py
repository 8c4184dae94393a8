"""Closed-form outcome distributions of a strategy.

Two views of the residual liquidity are evaluated separately:

* investment view: lifetimes as projected, returns random.  The bequest share
  is affine in the perpetuity ``J``, so its first two moments follow from the
  gamma law of ``1/J``.
* liquidity view: returns as planned, transition times random.  The planned
  liquidity path ``X(T)`` is deterministic given the population hazard, and the
  shortfall probability is ``E[exp(-(Lambda + lambda_eln) tau)]`` where ``tau``
  is the first time ``X`` reaches the threshold ``nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .annuity import PricingResult, Strategy, Vehicle, death_benefit_epv, provider_discount_rate
from .lifetimes import LambdaSamples
from .market import annuity_epv, perpetuity_law, portfolio_law
from .params import ModelParams

HORIZON = 80.0
N_INTERVALS = 10
ROOT_TOL = 1e-10
SERIES_EPS = 1e-10
NEVER = math.inf


class InadmissibleWeightError(ValueError):
    """Second moment of the bequest does not exist at this market weight."""


@dataclass(frozen=True)
class InvestmentOutcome:
    mean: float
    second_moment: float
    variance: float


@dataclass(frozen=True)
class ShortfallResult:
    """``taus`` holds one shortfall time per hazard sample; ``inf`` means never."""

    taus: np.ndarray
    probability: float
    nu: float

    @property
    def never(self) -> np.ndarray:
        return np.isinf(self.taus)


# --------------------------------------------------------------------------
# investment view


def moment_arrays(vehicle: Vehicle, w: float, phi, params: ModelParams, outlay, beta: float = 0.0):
    """Mean, second moment and variance of the bequest share, vectorised over ``phi``.

    ``outlay`` is the total up-front payment (loaded premium plus hedge
    injection) matching each ``phi``.
    """
    vehicle = Vehicle.parse(vehicle)
    lam, c = params.lam, params.c
    law = portfolio_law(params.market, w)
    plaw = perpetuity_law(law, lam)
    if not plaw.degenerate and not plaw.alpha > 2:
        raise InadmissibleWeightError(f"gamma shape alpha={plaw.alpha:.4g} <= 2 at w={w}")
    m1 = plaw.mean
    var_j = plaw.variance
    phi = np.asarray(phi, dtype=float)
    pay = phi * (1.0 + beta * lam)
    start = 1.0 - np.asarray(outlay, dtype=float)
    if vehicle.risk_free_provider:
        a0 = start
        b0 = c - pay
    else:
        a0 = start + pay * annuity_epv(law, lam)
        b0 = np.full_like(a0, c)
    mean = a0 - b0 * m1
    var = b0 * b0 * var_j
    return mean, var + mean * mean, var


def xi_moments(strategy: Strategy, params: ModelParams, pricing: PricingResult) -> InvestmentOutcome:
    mean, second, var = moment_arrays(
        strategy.vehicle, strategy.w, strategy.phi, params, pricing.outlay, strategy.beta
    )
    return InvestmentOutcome(float(mean), float(second), float(var))


# --------------------------------------------------------------------------
# liquidity view


def _discounted_length(k, T):
    """``int_0^T exp(-k t) dt`` with a Taylor branch for ``|k|`` near zero."""
    k = np.asarray(k, dtype=float)
    T = np.asarray(T, dtype=float)
    small = np.abs(k) < SERIES_EPS
    safe_k = np.where(small, 1.0, k)
    exact = -np.expm1(-safe_k * T) / safe_k
    series = T - k * T * T / 2.0 + k * k * T**3 / 6.0
    return np.where(small, series, exact)


def path_value(T, start, c, mu, pay, drift):
    """Planned liquidity ``X(T) = start - int_0^T (c - pay e^{drift t}) e^{-mu t} dt``.

    ``drift`` is ``Lambda - lambda`` for vehicles that pass on mortality
    experience and 0 otherwise.  All arguments broadcast.
    """
    return start - c * _discounted_length(mu, T) + pay * _discounted_length(mu - drift, T)


def _turning_point(c, pay, drift):
    # X'(T) = e^{-mu T}(pay e^{drift T} - c): a single sign change at most
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.log(c / pay) / drift
    ok = (pay > 0) & (drift != 0) & np.isfinite(t) & (t > 0) & (t < HORIZON)
    return np.where(ok, t, 0.0)


def shortfall_times(start, c, mu, pay, drift, nu):
    """First time the planned path reaches ``nu``, vectorised; ``inf`` if never.

    The horizon [0, 80] is cut into 10 equal intervals and the first interval
    with a crossing is bisected.  The path's single turning point is added as
    an extra cut so every interval is monotone and no crossing pair is missed.
    """
    start, pay, drift = np.broadcast_arrays(
        np.asarray(start, float), np.asarray(pay, float), np.asarray(drift, float)
    )
    shape = start.shape
    start, pay, drift = start.ravel(), pay.ravel(), drift.ravel()
    n = start.size
    grid = np.linspace(0.0, HORIZON, N_INTERVALS + 1)
    cuts = np.empty((n, N_INTERVALS + 2))
    cuts[:, :-1] = grid
    cuts[:, -1] = _turning_point(c, pay, drift)
    cuts.sort(axis=1)

    f = path_value(cuts, start[:, None], c, mu, pay[:, None], drift[:, None]) - nu
    below = f <= 0.0
    tau = np.full(n, NEVER)
    tau[below[:, 0]] = 0.0
    hit = below.any(axis=1) & ~below[:, 0]
    if hit.any():
        idx = np.flatnonzero(hit)
        k = below[idx].argmax(axis=1)
        lo = cuts[idx, k - 1]
        hi = cuts[idx, k]
        s, p, d = start[idx], pay[idx], drift[idx]
        while True:
            width = hi - lo
            if width.max() <= ROOT_TOL:
                break
            mid = lo + 0.5 * width
            fm = path_value(mid, s, c, mu, p, d) - nu
            down = fm <= 0.0
            hi = np.where(down, mid, hi)
            lo = np.where(down, lo, mid)
        tau[idx] = hi
    return tau.reshape(shape)


def _liquidity_inputs(strategy: Strategy, params: ModelParams, pricing: PricingResult):
    law = portfolio_law(params.market, strategy.w)
    pay = strategy.phi * (1.0 + strategy.beta * params.lam)
    return 1.0 - pricing.outlay, law.mu, pay


def liquidity_path_value(
    strategy: Strategy, params: ModelParams, pricing: PricingResult, Lambda: float, T: float
) -> float:
    if T < 0:
        raise ValueError("T must be non-negative")
    start, mu, pay = _liquidity_inputs(strategy, params, pricing)
    drift = Lambda - params.lam if strategy.vehicle.pooled_mortality else 0.0
    return float(path_value(T, start, params.c, mu, pay, drift))


def shortfall_time(
    strategy: Strategy, params: ModelParams, pricing: PricingResult, Lambda: float, nu: float
) -> float:
    if not 0 <= nu < 1:
        raise ValueError("shortfall threshold must lie in [0, 1)")
    start, mu, pay = _liquidity_inputs(strategy, params, pricing)
    drift = Lambda - params.lam if strategy.vehicle.pooled_mortality else 0.0
    return float(shortfall_times(start, params.c, mu, pay, drift, nu))


def probability_from_taus(taus, lambdas, lambda_eln):
    """``mean over samples of exp(-(Lambda + lambda_eln) tau)``, last axis = samples."""
    rate = np.asarray(lambdas, dtype=float) + lambda_eln
    with np.errstate(invalid="ignore"):
        terms = np.exp(-rate * taus)
    terms = np.where(taus == 0.0, 1.0, terms)
    return terms.mean(axis=-1)


def shortfall_probability(
    strategy: Strategy,
    params: ModelParams,
    pricing: PricingResult,
    lambdas: LambdaSamples,
    nu: float,
) -> ShortfallResult:
    if not 0 <= nu < 1:
        raise ValueError("shortfall threshold must lie in [0, 1)")
    lam_s = np.asarray(lambdas.values if isinstance(lambdas, LambdaSamples) else lambdas, dtype=float)
    start, mu, pay = _liquidity_inputs(strategy, params, pricing)
    if strategy.vehicle.pooled_mortality:
        taus = shortfall_times(start, params.c, mu, pay, lam_s - params.lam, nu)
    else:
        taus = np.full(lam_s.shape, float(shortfall_times(start, params.c, mu, pay, 0.0, nu)))
    prob = float(probability_from_taus(taus, lam_s, params.mortality.lambda_eln))
    return ShortfallResult(taus=taus, probability=prob, nu=nu)


def hedge_rate(strategy: Strategy, params: ModelParams) -> float:
    """Discount rate ``u`` used for the death benefit of this strategy."""
    law = portfolio_law(params.market, strategy.w)
    return provider_discount_rate(strategy.vehicle, params.market, law)


def hedge_epv(strategy: Strategy, params: ModelParams) -> float:
    return death_benefit_epv(params.lam, hedge_rate(strategy, params))
