"""Real-return dynamics of the drawdown account.

The real discount process of a fund holding weight ``w`` in the market
portfolio and ``1 - w`` in inflation-indexed bonds is

    I(t) = exp(-(mu(w) - sigma(w)^2 / 2) t - sigma(w) B_t)

and the discounted lifetime integral ``J = int_0^inf exp(-lam t) I(t) dt`` has a
reciprocal that is gamma distributed.  Everything the optimizer needs about
investment risk comes out of that gamma law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import bisect
from scipy.stats import gamma


class IllDefinedAnnuityError(ValueError):
    """The expected present value of the lifetime annuity diverges."""


class UndefinedMomentError(ValueError):
    """Requested perpetuity moment does not exist (gamma shape too small)."""


@dataclass(frozen=True)
class MarketParams:
    r: float = 0.005
    pi: float = 0.025
    sigma_pi: float = 0.0185
    mu_M: float = 0.095
    sigma_M: float = 0.16

    def __post_init__(self):
        if self.sigma_pi < 0 or self.sigma_M < 0:
            raise ValueError("volatilities must be non-negative")
        if not self.mu_M - self.pi > self.r:
            raise ValueError("real market risk premium mu_M - pi - r must be positive")

    @property
    def risk_premium(self) -> float:
        return self.mu_M - self.pi - self.r

    @property
    def total_variance(self) -> float:
        """Instantaneous real variance of a unit market weight."""
        return self.sigma_M**2 + self.sigma_pi**2


@dataclass(frozen=True)
class PortfolioLaw:
    w: float
    mu: float
    sigma2: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def expected_discount_rate(self) -> float:
        """Exponent of E[I(t)] = exp(-(mu - sigma^2) t)."""
        return self.mu - self.sigma2


@dataclass(frozen=True)
class PerpetuityLaw:
    """Law of the perpetuity ``int_0^inf exp(-(v t + s B_t)) dt``.

    For ``s > 0`` its reciprocal is Gamma(alpha, eta) with rate ``eta``.  For
    ``s == 0`` the integral is the constant ``1 / v``.
    """

    v: float
    s: float

    @property
    def degenerate(self) -> bool:
        return self.s == 0.0

    @property
    def alpha(self) -> float:
        return math.inf if self.degenerate else 2.0 * self.v / self.s**2

    @property
    def eta(self) -> float:
        return math.inf if self.degenerate else 2.0 / self.s**2

    def density(self, x):
        """Density of the reciprocal integral (gamma), not defined when degenerate."""
        if self.degenerate:
            raise ValueError("degenerate law has no density")
        return gamma.pdf(x, a=self.alpha, scale=1.0 / self.eta)

    def moment(self, n: int) -> float:
        return perpetuity_moment(self, n)

    @property
    def mean(self) -> float:
        return perpetuity_moment(self, 1)

    @property
    def variance(self) -> float:
        if self.degenerate:
            return 0.0
        m1 = self.mean
        # eta^2 / ((alpha-1)^2 (alpha-2)) written without the cancelling difference
        return m1 * m1 / (self.alpha - 2.0)


def portfolio_law(params: MarketParams, w: float) -> PortfolioLaw:
    if w < 0:
        raise ValueError(f"market weight must be non-negative, got {w}")
    mu = (1.0 - w) * params.r + w * (params.mu_M - params.pi)
    sigma2 = w * w * params.total_variance
    return PortfolioLaw(w=float(w), mu=mu, sigma2=sigma2)


def annuity_epv(law: PortfolioLaw, lam: float) -> float:
    """Expected present value of a continuous unit life annuity, in years."""
    denom = lam + law.mu - law.sigma2
    if not denom > 0:
        raise IllDefinedAnnuityError(
            f"annuity EPV undefined: lambda + mu - sigma^2 = {denom:.6g} <= 0 at w={law.w}"
        )
    return 1.0 / denom


def perpetuity_law(law: PortfolioLaw, lam: float) -> PerpetuityLaw:
    v = lam + law.mu - 0.5 * law.sigma2
    if not v > 0:
        raise ValueError(f"perpetuity drift v = {v:.6g} must be positive")
    return PerpetuityLaw(v=v, s=math.sqrt(law.sigma2))


def perpetuity_moment(plaw: PerpetuityLaw, n: int) -> float:
    """N-th raw moment ``eta^n Gamma(alpha - n) / Gamma(alpha)`` of the perpetuity.

    For integer ``n`` the gamma ratio is the finite product ``1 / prod (alpha - k)``,
    which stays exact when ``alpha`` is huge (small weights).
    """
    if n < 1 or int(n) != n:
        raise ValueError("moment order must be a positive integer")
    n = int(n)
    if plaw.degenerate:
        return plaw.v ** (-n)
    alpha, eta = plaw.alpha, plaw.eta
    if not alpha > n:
        raise UndefinedMomentError(f"moment {n} undefined for gamma shape alpha={alpha:.6g}")
    out = 1.0
    for k in range(1, n + 1):
        out *= eta / (alpha - k)
    return out


def shape_at(params: MarketParams, lam: float, w: float) -> float:
    """Gamma shape alpha(w) of the reciprocal perpetuity."""
    law = portfolio_law(params, w)
    if law.sigma2 == 0:
        return math.inf
    return 2.0 * (lam + law.mu) / law.sigma2 - 1.0


def weight_bounds(params: MarketParams, lam: float, xtol: float = 1e-8) -> tuple[float, float]:
    """Return ``(w0, w1)``.

    ``w0`` minimises the annuity EPV; beyond it extra market weight buys only
    variance.  ``w1`` is where the gamma shape drops to 2 and the second moment
    of the perpetuity stops existing.  Both are ``inf`` without volatility.
    """
    var = params.total_variance
    if var == 0:
        return math.inf, math.inf
    w0 = params.risk_premium / (2.0 * var)

    def f(w):
        return shape_at(params, lam, w) - 2.0

    lo = 1e-6
    hi = max(10.0, 2.0 * w0)
    while f(hi) > 0:
        hi *= 2.0
    w1 = bisect(f, lo, hi, xtol=xtol, maxiter=500)
    return w0, w1


def max_weight(params: MarketParams, lam: float) -> float:
    """Hard cap on admissible weights, ``min(w0, w1)``."""
    return min(weight_bounds(params, lam))
