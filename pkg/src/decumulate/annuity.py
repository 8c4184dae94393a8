"""The Annuity Family: payment vehicles, fair prices and loadings.

Each vehicle pays ``phi * g(t)`` where ``g`` undoes some subset of the
interest-rate adjustment (IRA) and mortality-experience adjustment (MEA) of a
group self-annuitisation pool:

    GSA  g = IRA * MEA   no guarantee
    ULA  g = IRA         mortality credits guaranteed
    LIA  g = MEA         portfolio return guaranteed (provider holds risk-free)
    IIA  g = 1           both guaranteed

A death benefit in ratio ``beta`` (natural hedge) lowers the provider's cost
variance by ``(1 - beta * u)^2`` and the loading by ``(1 - beta * u)``, where
``u`` is the provider's expected discount rate.  The hedge is paid for by an
extra up-front injection ``phi * beta * A`` with ``A = E[exp(-u T_x)]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .lifetimes import LambdaSamples
from .market import MarketParams, PortfolioLaw, portfolio_law


class Vehicle(str, enum.Enum):
    GSA = "GSA"
    ULA = "ULA"
    LIA = "LIA"
    IIA = "IIA"

    @property
    def risk_free_provider(self) -> bool:
        """LIA and IIA back payments with the risk-free asset."""
        return self in (Vehicle.LIA, Vehicle.IIA)

    @property
    def pooled_mortality(self) -> bool:
        """GSA and LIA pass pool mortality experience to the retiree."""
        return self in (Vehicle.GSA, Vehicle.LIA)

    @property
    def carries_loading(self) -> bool:
        return self in (Vehicle.ULA, Vehicle.IIA)

    @property
    def rank(self) -> int:
        return VEHICLE_ORDER.index(self)

    @classmethod
    def parse(cls, value) -> "Vehicle":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown vehicle {value!r}; choose from {[v.value for v in cls]}") from None


VEHICLE_ORDER = (Vehicle.GSA, Vehicle.ULA, Vehicle.LIA, Vehicle.IIA)


class VarianceBasis(str, enum.Enum):
    AVERAGE_COST = "average_cost"
    INDIVIDUAL_COST = "individual_cost"


@dataclass(frozen=True)
class Strategy:
    """One point of the decision space.

    ``phi = 0`` is pure drawdown whatever the vehicle.
    """

    vehicle: Vehicle
    w: float
    phi: float
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "vehicle", Vehicle.parse(self.vehicle))
        if self.w < 0:
            raise ValueError("market weight must be non-negative")
        if self.phi < 0:
            raise ValueError("payment rate must be non-negative")
        if self.beta < 0:
            raise ValueError("death-benefit ratio must be non-negative")


@dataclass(frozen=True)
class LoadingPolicy:
    sharpe: float = 0.2
    pool_size: int = 5000
    variance_basis: VarianceBasis = VarianceBasis.INDIVIDUAL_COST

    def __post_init__(self):
        object.__setattr__(self, "variance_basis", VarianceBasis(self.variance_basis))
        if self.sharpe < 0:
            raise ValueError("target Sharpe ratio must be non-negative")
        if self.pool_size < 1:
            raise ValueError("pool size must be at least 1")


@dataclass(frozen=True)
class PricingResult:
    p0: float
    theta: float
    p_theta: float
    hedge_injection: float = 0.0

    @property
    def outlay(self) -> float:
        """Total initial payment as a fraction of wealth."""
        return self.p_theta + self.hedge_injection

    @property
    def admissible(self) -> bool:
        return self.outlay < 1.0


def provider_discount_rate(vehicle: Vehicle, market: MarketParams, law: PortfolioLaw) -> float:
    """Exponent of the provider account's expected discount factor."""
    if Vehicle.parse(vehicle).risk_free_provider:
        return market.r
    return law.mu - law.sigma2


def _rate(strategy: Strategy, market: MarketParams) -> float:
    return provider_discount_rate(strategy.vehicle, market, portfolio_law(market, strategy.w))


def fair_price(strategy: Strategy, market: MarketParams, lam: float) -> float:
    """Actuarially fair premium on the projected hazard."""
    rho = _rate(strategy, market)
    if not lam + rho > 0:
        raise ValueError(f"fair price undefined: lambda + rho = {lam + rho:.6g} <= 0")
    return strategy.phi / (lam + rho)


def _conditional_cost_variance(phi, beta, rho, lam):
    # Var over T ~ Exp(lam) of phi/rho + phi (beta - 1/rho) exp(-rho T), simplified so
    # that rho -> 0 needs no special case.
    lam = np.asarray(lam, dtype=float)
    return phi**2 * (1.0 - beta * rho) ** 2 * lam / ((lam + 2.0 * rho) * (lam + rho) ** 2)


def individual_cost_variance(strategy: Strategy, market: MarketParams, lam: float) -> float:
    """Variance of one life's discounted cost on the projected hazard (zero for GSA/LIA)."""
    if not strategy.vehicle.carries_loading:
        return 0.0
    rho = _rate(strategy, market)
    return float(_conditional_cost_variance(strategy.phi, strategy.beta, rho, lam))


def avg_cost_variance(
    strategy: Strategy, market: MarketParams, pool_size: int, lambdas: LambdaSamples
) -> float:
    """Variance of the pool's average cost, decomposed over the population hazard.

    ``E[Var(C | Lambda)] + Var(E[C | Lambda])`` with the expectation taken
    over the shared hazard samples.  Zero for GSA/LIA, which pass all risk to
    the retiree.
    """
    if not strategy.vehicle.carries_loading:
        return 0.0
    rho = _rate(strategy, market)
    lam_s = np.asarray(lambdas.values if isinstance(lambdas, LambdaSamples) else lambdas, dtype=float)
    phi, beta = strategy.phi, strategy.beta
    within = _conditional_cost_variance(phi, beta, rho, lam_s) / pool_size
    # E[C | Lambda] = phi (1 + beta Lambda) / (Lambda + rho) = phi beta + phi (1 - beta rho)/(Lambda + rho)
    cond_mean = phi * (1.0 - beta * rho) / (lam_s + rho)
    return float(within.mean() + cond_mean.var())


def loading(
    strategy: Strategy,
    market: MarketParams,
    lam: float,
    policy: LoadingPolicy,
    lambdas: LambdaSamples | None = None,
) -> float:
    """Loading factor ``theta = (S / P0) * sd(cost)`` for the unhedged contract.

    The payment rate cancels, so any ``phi > 0`` gives the same answer.
    """
    if not strategy.vehicle.carries_loading or policy.sharpe == 0:
        return 0.0
    unit = Strategy(strategy.vehicle, strategy.w, 1.0, 0.0)
    p0 = fair_price(unit, market, lam)
    if policy.variance_basis is VarianceBasis.INDIVIDUAL_COST:
        var = individual_cost_variance(unit, market, lam)
    else:
        if lambdas is None:
            raise ValueError("average-cost loading needs hazard samples")
        var = avg_cost_variance(unit, market, policy.pool_size, lambdas)
    return policy.sharpe * math.sqrt(var) / p0


def natural_hedge_loading(theta0: float, beta: float, u_tilde: float) -> float:
    bu = beta * u_tilde
    if bu > 1.0 or bu < 0.0:
        raise ValueError(f"death benefit too large: beta * u = {bu:.6g} must lie in [0, 1]")
    return (1.0 - bu) * theta0


def death_benefit_epv(lam: float, u_tilde: float) -> float:
    """``E[exp(-u T_x)]`` for exponential ``T_x``."""
    if not lam + u_tilde > 0:
        raise ValueError("need lambda + u > 0")
    return lam / (lam + u_tilde)


def price(
    strategy: Strategy,
    market: MarketParams,
    lam: float,
    policy: LoadingPolicy,
    lambdas: LambdaSamples | None = None,
) -> PricingResult:
    """Full up-front cost of a strategy: loaded premium plus hedge injection."""
    if strategy.phi == 0:
        return PricingResult(0.0, 0.0, 0.0, 0.0)
    u = _rate(strategy, market)
    p0 = fair_price(strategy, market, lam)
    theta0 = loading(strategy, market, lam, policy, lambdas)
    if strategy.beta and strategy.vehicle.carries_loading:
        theta = natural_hedge_loading(theta0, strategy.beta, u)
    else:
        theta = theta0
    injection = strategy.phi * strategy.beta * death_benefit_epv(lam, u) if strategy.beta else 0.0
    return PricingResult(p0=p0, theta=theta, p_theta=(1.0 + theta) * p0, hedge_injection=injection)
