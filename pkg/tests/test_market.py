import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decumulate.market import (
    IllDefinedAnnuityError,
    MarketParams,
    UndefinedMomentError,
    annuity_epv,
    max_weight,
    perpetuity_law,
    perpetuity_moment,
    portfolio_law,
    weight_bounds,
)
from decumulate.oracle import SimConfig, mean_estimate, simulate_discount, simulate_perpetuity

M = MarketParams()
LAM = 0.051


def test_portfolio_law_endpoints():
    law = portfolio_law(M, 0.0)
    assert law.mu == pytest.approx(0.005)
    assert law.sigma2 == 0.0
    law = portfolio_law(M, 1.0)
    assert law.mu == pytest.approx(0.070)
    assert law.sigma2 == pytest.approx(0.16**2 + 0.0185**2)
    assert law.sigma2 == pytest.approx(0.025942, abs=1e-6)


def test_portfolio_law_half():
    law = portfolio_law(M, 0.5)
    assert law.mu == pytest.approx(0.0375)
    assert law.sigma2 == pytest.approx(0.0064856, abs=1e-7)


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        portfolio_law(M, -0.1)


def test_market_params_validation():
    with pytest.raises(ValueError):
        MarketParams(sigma_M=-0.1)
    with pytest.raises(ValueError):
        MarketParams(mu_M=0.02)  # no real risk premium


def test_annuity_epv_values():
    assert annuity_epv(portfolio_law(M, 0.0), LAM) == pytest.approx(1 / 0.056)
    assert annuity_epv(portfolio_law(M, 0.5), LAM) == pytest.approx(12.19, abs=0.01)


def test_annuity_epv_decreases_in_lambda():
    law = portfolio_law(M, 0.7)
    vals = [annuity_epv(law, lam) for lam in (0.01, 0.05, 0.5, 5.0, 50.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.03


def test_annuity_epv_ill_defined():
    with pytest.raises(IllDefinedAnnuityError):
        annuity_epv(portfolio_law(M, 4.0), LAM)


def test_perpetuity_law_half():
    plaw = perpetuity_law(portfolio_law(M, 0.5), LAM)
    assert plaw.alpha == pytest.approx(26.29, abs=0.01)
    assert plaw.eta == pytest.approx(308.4, abs=0.05)
    assert plaw.mean == pytest.approx(annuity_epv(portfolio_law(M, 0.5), LAM), rel=1e-12)
    assert perpetuity_moment(plaw, 2) == pytest.approx(154.8, abs=0.05)


def test_degenerate_perpetuity():
    plaw = perpetuity_law(portfolio_law(M, 0.0), LAM)
    assert plaw.degenerate
    assert plaw.mean == pytest.approx(17.857, abs=1e-3)
    assert perpetuity_moment(plaw, 2) == pytest.approx(plaw.mean**2)
    assert plaw.variance == 0.0


def test_perpetuity_rejects_nonpositive_drift():
    with pytest.raises(ValueError):
        perpetuity_law(portfolio_law(MarketParams(r=-0.1), 0.0), 0.05)


def test_undefined_moment():
    plaw = perpetuity_law(portfolio_law(M, 2.5), LAM)
    assert plaw.alpha < 2
    with pytest.raises(UndefinedMomentError):
        perpetuity_moment(plaw, 2)


def test_reciprocal_density():
    from scipy.integrate import quad

    plaw = perpetuity_law(portfolio_law(M, 0.8), LAM)
    total, _ = quad(plaw.density, 0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)
    # density is that of 1/J
    m1, _ = quad(lambda x: plaw.density(x) / x, 0, np.inf, limit=200)
    assert m1 == pytest.approx(plaw.mean, rel=1e-7)


def test_weight_bounds():
    w0, w1 = weight_bounds(M, LAM)
    assert w0 == pytest.approx(1.25, abs=0.01)
    assert w1 == pytest.approx(2.30, abs=0.01)
    assert w0 == pytest.approx(0.065 / (2 * (0.16**2 + 0.0185**2)), rel=1e-12)
    assert perpetuity_law(portfolio_law(M, w1), LAM).alpha == pytest.approx(2.0, abs=1e-6)
    assert max_weight(M, LAM) == w0


def test_weight_bounds_without_volatility():
    assert weight_bounds(MarketParams(sigma_pi=0.0, sigma_M=0.0), LAM) == (math.inf, math.inf)


def test_annuity_epv_convex_with_minimum_at_w0():
    w0, w1 = weight_bounds(M, LAM)
    ws = np.linspace(0, w1 * 0.999, 801)
    a = np.array([annuity_epv(portfolio_law(M, w), LAM) for w in ws])
    assert np.all(np.diff(a, 2) > -1e-12)
    assert abs(ws[a.argmin()] - w0) < ws[1]


def test_perpetuity_mean_equals_epv_on_100_weights():
    _, w1 = weight_bounds(M, LAM)
    for w in np.linspace(0, w1, 100, endpoint=False):
        law = portfolio_law(M, w)
        plaw = perpetuity_law(law, LAM)
        assert perpetuity_moment(plaw, 1) == pytest.approx(annuity_epv(law, LAM), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 2.2))
def test_alpha_decreasing_in_w(w):
    a = perpetuity_law(portfolio_law(M, w + 0.01), LAM).alpha
    b = perpetuity_law(portfolio_law(M, w), LAM).alpha
    assert a < b


def test_discount_mean_at_one_year():
    t, paths = simulate_discount(M, 1.0, SimConfig(paths=40_000, dt=0.25, seed=11), horizon=1.0)
    law = portfolio_law(M, 1.0)
    est = mean_estimate(paths[:, -1])
    assert abs(est.z(math.exp(-(law.mu - law.sigma2)))) < 3


def test_discount_exact_without_volatility():
    t, paths = simulate_discount(M, 0.0, SimConfig(paths=8, dt=0.1), horizon=2.0)
    np.testing.assert_allclose(paths, np.exp(-0.005 * t)[None, :].repeat(8, 0), rtol=1e-13)


@pytest.mark.parametrize("w", [0.25, 0.5, 1.0])
def test_perpetuity_moments_against_simulation(w):
    plaw = perpetuity_law(portfolio_law(M, w), LAM)
    j = simulate_perpetuity(M, w, LAM, SimConfig(paths=20_000, dt=1 / 12, seed=5))
    assert abs(mean_estimate(j).z(plaw.mean)) < 3
    assert abs(mean_estimate(j * j).z(perpetuity_moment(plaw, 2))) < 3


@pytest.mark.nightly
@pytest.mark.parametrize("w", [0.25, 0.5, 1.0])
def test_perpetuity_moments_nightly(w):
    plaw = perpetuity_law(portfolio_law(M, w), LAM)
    j = simulate_perpetuity(M, w, LAM, SimConfig(paths=100_000, dt=1 / 52, seed=5))
    assert abs(mean_estimate(j).z(plaw.mean)) < 3
    assert abs(mean_estimate(j * j).z(perpetuity_moment(plaw, 2))) < 3
