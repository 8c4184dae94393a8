"""Monte Carlo counterparts of the closed-form quantities.

The simulators never touch the gamma law of the perpetuity or the closed-form root
search: discount paths are simulated with exact lognormal increments and
integrated numerically, lifetimes and pools are simulated directly.  Only
the comparison helpers at the end call the closed forms.

Paths are generated in fixed-size blocks, each with its own Philox stream
keyed by ``(seed, stream, block)``, so results do not depend on how many
worker threads process the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .annuity import PricingResult, Strategy, Vehicle, price, provider_discount_rate
from .lifetimes import MortalityParams, lognormal_shape_params
from .market import MarketParams, portfolio_law
from .outcomes import HORIZON, shortfall_probability, xi_moments
from .params import ModelParams

BLOCK = 4096

# stream tags keep the quantities' random numbers apart under one seed
_DISCOUNT, _XI, _SHORTFALL, _POOL, _LIFE = range(5)


@dataclass(frozen=True)
class SimConfig:
    paths: int = 10_000
    dt: float = 1.0 / 252.0
    horizon: float | None = None  # None: long enough that the truncated tail is negligible
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.paths < 2:
            raise ValueError("need at least two paths")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    trials: int | None = None  # set for binomial proportions

    def se_at(self, exact: float) -> float:
        """Standard error used to test agreement with ``exact``.

        Proportions use the binomial error at the hypothesised probability (a
        score test), which stays meaningful when no events were observed.
        """
        if self.trials:
            return math.sqrt(max(exact * (1.0 - exact), 0.0) / self.trials)
        return self.std_error

    def z(self, exact: float) -> float:
        diff = self.value - exact
        se = self.se_at(exact)
        if se > 0:
            return diff / se
        return 0.0 if abs(diff) <= 1e-9 * max(1.0, abs(exact)) else math.copysign(math.inf, diff)


@dataclass(frozen=True)
class OutcomeEstimate:
    mean: Estimate
    variance: Estimate
    second_moment: Estimate


def _rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, block])))


def _blocks(total: int):
    start = 0
    k = 0
    while start < total:
        n = min(BLOCK, total - start)
        yield k, n
        start += n
        k += 1


def _run_blocks(fn, total: int, threads: int):
    blocks = list(_blocks(total))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda kb: fn(*kb), blocks))
    else:
        parts = [fn(k, n) for k, n in blocks]
    return np.concatenate(parts)


def mean_estimate(x) -> Estimate:
    x = np.asarray(x, dtype=float)
    return Estimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))))


def variance_estimate(x) -> Estimate:
    """Sample variance with a fourth-moment standard error."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    d = x - x.mean()
    s2 = float(d @ d / (n - 1))
    m4 = float(np.mean(d**4))
    se = math.sqrt(max(m4 - s2 * s2, 0.0) / n)
    return Estimate(s2, se)


def _time_grid(horizon: float, dt: float) -> np.ndarray:
    steps = max(1, int(math.ceil(horizon / dt - 1e-9)))
    return np.linspace(0.0, steps * dt, steps + 1)


def simulate_discount(market: MarketParams, w: float, cfg: SimConfig, horizon: float | None = None):
    """Real discount paths ``I(t)`` on ``t = 0, dt, ..., horizon``.

    Returns ``(times, paths)`` with ``paths[i, k] = I(t_k)`` for path ``i``.
    """
    law = portfolio_law(market, w)
    horizon = horizon if horizon is not None else (cfg.horizon or 1.0)
    t = _time_grid(horizon, cfg.dt)
    dt = t[1] - t[0]
    drift = -(law.mu - 0.5 * law.sigma2) * dt
    vol = math.sqrt(law.sigma2 * dt)

    def block(k, n):
        z = _rng(cfg.seed, _DISCOUNT, k).standard_normal((n, len(t) - 1))
        logi = np.zeros((n, len(t)))
        np.cumsum(drift - vol * z, axis=1, out=logi[:, 1:])
        return np.exp(logi)

    return t, _run_blocks(block, cfg.paths, cfg.threads)


def _auto_horizon(lam: float, mu: float, sigma2: float) -> float:
    # slowest of the decay rates of E[e^{-lam t} I] and E[(e^{-lam t} I)^2]
    rate = min(lam + mu - sigma2, 2 * (lam + mu) - 3 * sigma2)
    return 18.0 / rate


def _loglinear_steps(x0, x1, dt):
    """``int exp(x)`` over one step with ``x`` linear between the endpoints."""
    d = x1 - x0
    small = np.abs(d) < 1e-8
    safe = np.where(small, 1.0, d)
    exact = dt * (np.exp(x1) - np.exp(x0)) / safe
    series = dt * np.exp(x0) * (1.0 + d / 2.0 + d * d / 6.0)
    return np.where(small, series, exact)


def simulate_perpetuity(market: MarketParams, w: float, lam: float, cfg: SimConfig,
                        stream: int = _XI) -> np.ndarray:
    """Samples of ``J = int_0^inf exp(-lam t) I(t) dt``.

    Each step uses the log-linear rule times the Brownian-bridge factor
    ``1 + sigma^2 dt / 12`` (the conditional mean of the bridge wiggle).  The
    tail beyond the horizon is replaced by its conditional expectation.
    """
    law = portfolio_law(market, w)
    mu, s2 = law.mu, law.sigma2
    horizon = cfg.horizon or _auto_horizon(lam, mu, s2)
    steps = max(1, int(math.ceil(horizon / cfg.dt)))
    dt = horizon / steps
    drift = -(lam + mu - 0.5 * s2) * dt
    vol = math.sqrt(s2 * dt)
    bridge = 1.0 + s2 * dt / 12.0
    tail_rate = lam + mu - s2
    chunk = 256

    def block(k, n):
        rng = _rng(cfg.seed, stream, k)
        x = np.zeros(n)  # log of exp(-lam t) I(t)
        acc = np.zeros(n)
        done = 0
        while done < steps:
            m = min(chunk, steps - done)
            inc = drift - vol * rng.standard_normal((n, m))
            path = np.empty((n, m + 1))
            path[:, 0] = x
            np.cumsum(inc, axis=1, out=path[:, 1:])
            path[:, 1:] += x[:, None]
            acc += _loglinear_steps(path[:, :-1], path[:, 1:], dt).sum(axis=1)
            x = path[:, -1]
            done += m
        return acc * bridge + np.exp(x) / tail_rate

    return _run_blocks(block, cfg.paths, cfg.threads)


def _deterministic_integral(rate: float, horizon: float, dt: float) -> float:
    steps = max(1, int(math.ceil(horizon / dt)))
    h = horizon / steps
    t = np.arange(steps + 1) * h
    x = -rate * t
    return float(_loglinear_steps(x[:-1], x[1:], h).sum() + math.exp(-rate * horizon) / rate)


def mc_xi_moments(strategy: Strategy, params: ModelParams, pricing: PricingResult,
                  cfg: SimConfig) -> OutcomeEstimate:
    """Simulated bequest share ``K - int e^{-lam t} I(t) (c - pay * g(t)) dt``.

    For GSA/ULA the provider follows the retiree's portfolio, so
    ``I(t) * g(t) = E[I(t)]`` and that leg is a deterministic integral.
    """
    lam, c = params.lam, params.c
    law = portfolio_law(params.market, strategy.w)
    pay = strategy.phi * (1.0 + strategy.beta * lam)
    start = 1.0 - pricing.outlay
    j = simulate_perpetuity(params.market, strategy.w, lam, cfg)
    if strategy.vehicle.risk_free_provider:
        x = start - (c - pay) * j
    else:
        horizon = cfg.horizon or _auto_horizon(lam, law.mu, law.sigma2)
        g_leg = _deterministic_integral(lam + law.mu - law.sigma2, horizon, cfg.dt)
        x = start - c * j + pay * g_leg
    return OutcomeEstimate(mean_estimate(x), variance_estimate(x), mean_estimate(x * x))


def _liquidity_grid_paths(t, start, c, mu, pay, drift):
    """Planned liquidity on the grid by cumulative trapezoid of the net outflow."""
    drift = np.atleast_1d(np.asarray(drift, dtype=float))
    flow = (c - pay * np.exp(drift[:, None] * t[None, :])) * np.exp(-mu * t)[None, :]
    h = t[1] - t[0]
    cum = np.zeros_like(flow)
    np.cumsum(0.5 * h * (flow[:, 1:] + flow[:, :-1]), axis=1, out=cum[:, 1:])
    return start - cum


def _first_crossing(t, x, nu):
    """Interpolated first grid time with ``x <= nu``; inf when never."""
    below = x <= nu
    any_below = below.any(axis=1)
    k = below.argmax(axis=1)
    tau = np.full(x.shape[0], np.inf)
    tau[any_below & (k == 0)] = 0.0
    mid = any_below & (k > 0)
    if mid.any():
        r = np.flatnonzero(mid)
        kk = k[r]
        x0, x1 = x[r, kk - 1], x[r, kk]
        frac = (x0 - nu) / (x0 - x1)
        tau[r] = t[kk - 1] + frac * (t[kk] - t[kk - 1])
    return tau


def mc_shortfall(strategy: Strategy, params: ModelParams, pricing: PricingResult,
                 mortality: MortalityParams, cfg: SimConfig, nu: float,
                 grid_dt: float = 1.0 / 52.0) -> Estimate:
    """Event simulation of ``P(T* >= tau_nu)``.

    Draw the population hazard, then the first transition time
    ``T* ~ Exp(Lambda + lambda_eln)``, and check whether the planned liquidity
    path has reached ``nu`` by then.  Standard error is binomial.
    """
    law = portfolio_law(params.market, strategy.w)
    pay = strategy.phi * (1.0 + strategy.beta * params.lam)
    start = 1.0 - pricing.outlay
    t = np.linspace(0.0, HORIZON, int(round(HORIZON / grid_dt)) + 1)
    mu_ln, s_hat = lognormal_shape_params(mortality)
    pooled = strategy.vehicle.pooled_mortality
    if not pooled:
        tau_fixed = _first_crossing(t, _liquidity_grid_paths(t, start, params.c, law.mu, pay, 0.0), nu)[0]

    def block(k, n):
        rng = _rng(cfg.seed, _SHORTFALL, k)
        if s_hat > 0:
            lam_s = mortality.lambda_floor + rng.lognormal(mu_ln, s_hat, size=n)
        else:
            lam_s = np.full(n, mortality.lam)
        t_star = rng.exponential(1.0, size=n) / (lam_s + mortality.lambda_eln)
        if pooled:
            tau = np.empty(n)
            for lo in range(0, n, 512):
                sl = slice(lo, lo + 512)
                xs = _liquidity_grid_paths(t, start, params.c, law.mu, pay, lam_s[sl] - params.lam)
                tau[sl] = _first_crossing(t, xs, nu)
        else:
            tau = np.full(n, tau_fixed)
        return (t_star >= tau).astype(float)

    hits = _run_blocks(block, cfg.paths, cfg.threads)
    p = float(hits.mean())
    return Estimate(p, math.sqrt(p * (1.0 - p) / len(hits)), trials=len(hits))


def mc_pool_cost(strategy: Strategy, market: MarketParams, n: int, Lambda: float,
                 cfg: SimConfig, dt: float = 1.0 / 12.0) -> Estimate:
    """Variance across pool replicates of the average discounted cost.

    Survivor counts evolve binomially on a time grid; payments accumulate by
    trapezoid over the survivor curve and death benefits are paid mid-step.
    """
    vehicle = strategy.vehicle
    law = portfolio_law(market, strategy.w)
    rho = provider_discount_rate(vehicle, market, law)
    p_step = math.exp(-Lambda * dt)
    phi, beta = strategy.phi, strategy.beta

    def block(k, reps):
        rng = _rng(cfg.seed, _POOL, k)
        alive = np.full(reps, n, dtype=np.int64)
        cost = np.zeros(reps)
        t = 0.0
        while alive.any():
            nxt = rng.binomial(alive, p_step)
            v0, v1 = math.exp(-rho * t), math.exp(-rho * (t + dt))
            cost += 0.5 * dt * (alive * v0 + nxt * v1)
            if beta:
                cost += beta * (alive - nxt) * math.exp(-rho * (t + 0.5 * dt))
            alive = nxt
            t += dt
        return phi * cost / n

    return variance_estimate(_run_blocks(block, cfg.paths, cfg.threads))


def mc_lifetimes(lam: float, cfg: SimConfig) -> np.ndarray:
    """Exponential lifetimes ``T_x ~ Exp(lam)``."""

    def block(k, n):
        return _rng(cfg.seed, _LIFE, k).exponential(1.0 / lam, size=n)

    return _run_blocks(block, cfg.paths, cfg.threads)


# --------------------------------------------------------------------------
# closed form vs simulation


@dataclass(frozen=True)
class Comparison:
    quantity: str
    closed_form: float
    estimate: Estimate

    @property
    def z_score(self) -> float:
        return self.estimate.z(self.closed_form)

    def row(self):
        se = self.estimate.se_at(self.closed_form)
        return (self.quantity, self.closed_form, self.estimate.value, se, self.z_score)


def random_strategies(vehicle: Vehicle, params: ModelParams, count: int, w_max: float,
                      seed: int, lambdas=None) -> list[Strategy]:
    """``count`` admissible strategies drawn uniformly over ``[0, w_max] x (0, c]``."""
    vehicle = Vehicle.parse(vehicle)
    rng = np.random.default_rng([seed, vehicle.rank])
    out = []
    while len(out) < count:
        w = float(rng.uniform(0.0, w_max))
        phi = float(rng.uniform(0.0, params.c))
        s = Strategy(vehicle, w, phi)
        if phi > 0 and price(s, params.market, params.lam, params.loading, lambdas).admissible:
            out.append(s)
    return out


def _tag(s: Strategy) -> str:
    return f"{s.vehicle.value}[w={s.w:.4f},phi={s.phi:.5f}]"


def compare_strategy(strategy: Strategy, params: ModelParams, lambdas, nu: float, cfg: SimConfig,
                     shortfall_lambdas=None) -> list[Comparison]:
    """Mean, variance and shortfall probability against their simulated counterparts.

    ``shortfall_lambdas`` (default ``lambdas``) feeds the closed-form
    probability; a large sample keeps its own sampling noise negligible.
    """
    pr = price(strategy, params.market, params.lam, params.loading, lambdas)
    exact = xi_moments(strategy, params, pr)
    est = mc_xi_moments(strategy, params, pr, cfg)
    prob = shortfall_probability(strategy, params, pr, shortfall_lambdas or lambdas, nu).probability
    sf = mc_shortfall(strategy, params, pr, params.mortality, cfg, nu)
    tag = _tag(strategy)
    return [
        Comparison(f"{tag}.mean", exact.mean, est.mean),
        Comparison(f"{tag}.variance", exact.variance, est.variance),
        Comparison(f"{tag}.shortfall_prob", prob, sf),
    ]
