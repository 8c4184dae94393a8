import math

import numpy as np
import pytest

from decumulate.annuity import Strategy, Vehicle, price
from decumulate.lifetimes import sample_lambdas
from decumulate.optimizer import (
    DRAWDOWN,
    INFEASIBLE,
    GridSpec,
    Optimum,
    RiskAppetite,
    column_pricing,
    evaluate_all,
    evaluate_surfaces,
    find_optimum,
    sweep_appetites,
    wealth_allocation,
)
from decumulate.outcomes import shortfall_probability, xi_moments

GRID = GridSpec(w_points=10, w_max=1.2, phi_points=10, c=0.052)


@pytest.fixture(scope="module")
def surfaces(params, lambdas):
    return evaluate_all(params, GRID, 0.2, lambdas)


def test_appetite_validation():
    with pytest.raises(ValueError):
        RiskAppetite(-1, 0.2)
    with pytest.raises(ValueError):
        RiskAppetite(1, 1.5)


def test_grid_cap(params):
    with pytest.raises(ValueError):
        GridSpec(w_max=1.3, c=0.052).check(params)
    with pytest.raises(ValueError):
        GridSpec(c=0.04).check(params)


def test_single_cell(flat_params):
    lam = sample_lambdas(flat_params.mortality, 3, 0)
    s = evaluate_surfaces("IIA", flat_params, GridSpec(1, 0.0, 1, 0.052), 0.0, lam)
    assert s.mean[0, 0] == pytest.approx(0.0714, abs=1e-4)
    assert s.variance[0, 0] == 0.0
    assert s.shortfall_prob[0, 0] == pytest.approx(0.179, abs=1e-3)


def test_surfaces_match_pointwise(params, lambdas, surfaces):
    for v, s in surfaces.items():
        for i in (0, 4, 9):
            for j in (0, 3, 9):
                st = Strategy(v, float(s.w[i]), float(s.phi[j]))
                pr = price(st, params.market, params.lam, params.loading, lambdas)
                out = xi_moments(st, params, pr)
                prob = shortfall_probability(st, params, pr, lambdas, 0.2).probability
                assert s.mean[i, j] == pytest.approx(out.mean, rel=1e-13, abs=1e-15)
                assert s.second_moment[i, j] == pytest.approx(out.second_moment, rel=1e-13)
                assert s.shortfall_prob[i, j] == pytest.approx(prob, abs=1e-12)
                assert s.admissible[i, j] == pr.admissible


def test_column_pricing_with_hedge_matches_price(params, lambdas):
    phi = np.array([0.0, 0.01, 0.03])
    for v in Vehicle:
        outlay, theta = column_pricing(v, 0.6, phi, params, lambdas, beta=8.0)
        for k, f in enumerate(phi):
            pr = price(Strategy(v, 0.6, float(f), 8.0), params.market, params.lam, params.loading, lambdas)
            assert outlay[k] == pytest.approx(pr.outlay, rel=1e-14, abs=1e-16)


def test_zero_payment_column_identical(surfaces):
    ref = surfaces[Vehicle.GSA]
    for s in surfaces.values():
        assert np.array_equal(s.mean[:, 0], ref.mean[:, 0])
        assert np.array_equal(s.shortfall_prob[:, 0], ref.shortfall_prob[:, 0])


def test_surfaces_deterministic(params, lambdas, surfaces):
    again = evaluate_surfaces("LIA", params, GRID, 0.2, lambdas, threads=3)
    s = surfaces[Vehicle.LIA]
    for name in ("mean", "second_moment", "variance", "shortfall_prob"):
        assert np.array_equal(getattr(s, name), getattr(again, name), equal_nan=True)


def _rescan(surfaces, b, psi):
    """Independent exhaustive scan, written against the raw arrays."""
    best = None
    for s in surfaces.values():
        for i in range(len(s.w)):
            for j in range(len(s.phi)):
                if not s.admissible[i, j] or not s.shortfall_prob[i, j] <= psi:
                    continue
                q = s.mean[i, j] - b * s.second_moment[i, j]
                key = (s.phi[j], s.w[i], s.vehicle.rank)
                if best is None or q > best[0] + 1e-12 * max(1, abs(best[0])) or (
                    abs(q - best[0]) <= 1e-12 * max(1, abs(best[0])) and key < best[1]
                ):
                    best = (q, key, s.vehicle)
    return best


def test_brute_force_equivalence(surfaces):
    for b in (0.0, 0.5, 2.0, 10.0):
        for psi in (0.0, 0.05, 0.2, 1.0):
            opt = find_optimum(surfaces, RiskAppetite(b, psi))
            ref = _rescan(surfaces, b, psi)
            if ref is None:
                assert not opt.feasible
                continue
            assert opt.feasible
            assert opt.q_star == ref[0]
            assert (opt.phi, opt.w, opt.vehicle) == (ref[1][0], ref[1][1], ref[2])


def test_unconstrained_mean(surfaces):
    opt = find_optimum(surfaces, RiskAppetite(0.0, 1.0))
    best = max(np.nanmax(np.where(s.admissible, s.mean, -np.inf)) for s in surfaces.values())
    assert opt.mean == best


def test_zero_tolerance_infeasible(surfaces):
    # every cell has positive shortfall probability at c=0.052, nu=0.2 on this grid
    if all((s.shortfall_prob[s.admissible] > 0).all() for s in surfaces.values()):
        opt = find_optimum(surfaces, RiskAppetite(1.0, 0.0))
        assert not opt.feasible
        assert opt.label == INFEASIBLE


def test_large_b_minimises_second_moment(surfaces):
    opt = find_optimum(surfaces, RiskAppetite(1e6, 0.3))
    m2 = min(
        np.min(s.second_moment[s.admissible & (s.shortfall_prob <= 0.3)])
        for s in surfaces.values()
        if (s.admissible & (s.shortfall_prob <= 0.3)).any()
    )
    assert opt.second_moment == pytest.approx(m2, rel=1e-12)


def test_feasible_set_grows_with_psi(surfaces):
    for s in surfaces.values():
        sets = [s.admissible & (s.shortfall_prob <= psi) for psi in (0.1, 0.2, 0.4)]
        assert np.all(sets[0] <= sets[1]) and np.all(sets[1] <= sets[2])


def test_q_star_monotone(surfaces):
    rng = np.random.default_rng(0)
    for _ in range(100):
        b, psi = rng.uniform(0, 20), rng.uniform(0.05, 0.5)
        q = find_optimum(surfaces, RiskAppetite(b, psi)).q_star
        assert find_optimum(surfaces, RiskAppetite(b + 1, psi)).q_star <= q + 1e-15
        assert find_optimum(surfaces, RiskAppetite(b, psi + 0.05)).q_star >= q - 1e-15


def test_gsa_never_wins_on_q_alone(surfaces):
    # GSA cells tie with drawdown at equal w, so a GSA label only appears when
    # the drawdown cell at that w is excluded by the liquidity constraint
    rng = np.random.default_rng(1)
    for _ in range(60):
        b, psi = rng.uniform(0.5, 20), rng.uniform(0.05, 0.5)
        opt = find_optimum(surfaces, RiskAppetite(b, psi))
        if opt.feasible and opt.label == "GSA":
            s = surfaces[Vehicle.GSA]
            i = int(np.flatnonzero(s.w == opt.w)[0])
            assert s.shortfall_prob[i, 0] > psi


def test_tie_break_prefers_drawdown(surfaces):
    # without a binding constraint, GSA at phi>0 equals drawdown; phi=0 must win
    opt = find_optimum({Vehicle.GSA: surfaces[Vehicle.GSA]}, RiskAppetite(2.0, 1.0))
    assert opt.phi == 0.0 and opt.label == DRAWDOWN


def test_single_cell_map(params, lambdas):
    s = evaluate_all(params, GridSpec(1, 0.0, 1, 0.052), 0.2, lambdas)
    dmap = sweep_appetites(s, [0.5, 5, 10], [0.5, 0.9])
    assert set(dmap.labels().ravel()) == {DRAWDOWN}


def test_sweep_thread_independent(surfaces):
    a = sweep_appetites(surfaces, np.linspace(0.5, 20, 6), np.linspace(0.05, 0.5, 6), threads=1)
    b = sweep_appetites(surfaces, np.linspace(0.5, 20, 6), np.linspace(0.05, 0.5, 6), threads=4)
    assert a.optima == b.optima


def test_allocation_examples(params):
    opt = Optimum(Vehicle.GSA, 0.6, 0.0, 0.0, True)
    alloc = wealth_allocation(opt, price(Strategy("GSA", 0.6, 0.0), params.market, params.lam, params.loading))
    assert (alloc.pool_premium, alloc.market, alloc.risk_free) == (0.0, 0.6, pytest.approx(0.4))

    pr = price(Strategy("IIA", 0.5, 0.04), params.market, params.lam, params.loading)
    alloc = wealth_allocation(Optimum(Vehicle.IIA, 0.5, 0.04, 0.0, True), pr)
    assert alloc.pool_premium == pytest.approx(0.845, abs=1e-3)
    assert alloc.market == pytest.approx(0.0775, abs=1e-3)
    assert alloc.risk_free == pytest.approx(0.0775, abs=1e-3)

    pr = price(Strategy("GSA", 0.5, 0.03), params.market, params.lam, params.loading)
    alloc = wealth_allocation(Optimum(Vehicle.GSA, 0.5, 0.03, 0.0, True), pr)
    assert alloc.pool_premium == pytest.approx(0.3657, abs=1e-4)
    assert alloc.market == 0.5
    assert alloc.risk_free == pytest.approx(0.1343, abs=1e-4)
    assert not alloc.leveraged

    alloc = wealth_allocation(Optimum(Vehicle.GSA, 1.1, 0.0, 0.0, True), price(
        Strategy("GSA", 1.1, 0.0), params.market, params.lam, params.loading))
    assert alloc.leveraged and alloc.risk_free < 0

    with pytest.raises(ValueError):
        wealth_allocation(Optimum(None, math.nan, math.nan, -math.inf, False), pr)
