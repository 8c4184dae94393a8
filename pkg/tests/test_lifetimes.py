import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decumulate.lifetimes import (
    LifeTable,
    MortalityParams,
    TableFormatError,
    fit_eln_hazard,
    fit_lambda,
    inverse_hazard_variance,
    life_expectancy,
    lognormal_shape_params,
    projected_qx,
    read_care_table,
    read_life_table,
    sample_lambdas,
    survival,
)

DATA = Path(__file__).parent / "data"


def test_survival():
    assert survival(0.3, 0.0) == 1.0
    assert survival(0.0, 50.0) == 1.0
    assert survival(0.051, 19.42) == pytest.approx(math.exp(-0.99042), rel=1e-12)
    assert survival(0.051, 19.42) == pytest.approx(0.3714, abs=1e-4)
    with pytest.raises(ValueError):
        survival(0.05, -1.0)


def test_mortality_params_validation():
    with pytest.raises(ValueError):
        MortalityParams(lam=0.01, lambda_floor=0.02)
    with pytest.raises(ValueError):
        MortalityParams(sigma_hat=-0.1)
    with pytest.raises(ValueError):
        MortalityParams(lambda_eln=-0.01)


def test_shape_params_mean_condition():
    m = MortalityParams()
    mu_ln, s = lognormal_shape_params(m)
    assert s == 0.064
    assert m.lambda_floor + math.exp(mu_ln + s * s / 2) == pytest.approx(0.051, rel=1e-14)


def test_degenerate_samples():
    lam = sample_lambdas(MortalityParams(sigma_hat=0.0), 5, 1)
    assert list(lam.values) == [0.051] * 5


def test_samples_reproducible_and_read_only():
    m = MortalityParams()
    a = sample_lambdas(m, 200, 42)
    b = sample_lambdas(m, 200, 42)
    assert np.array_equal(a.values, b.values)
    assert np.all(a.values > m.lambda_floor)
    with pytest.raises(ValueError):
        a.values[0] = 1.0
    assert not np.array_equal(a.values, sample_lambdas(m, 200, 43).values)


def test_sample_mean_within_three_standard_errors():
    v = sample_lambdas(MortalityParams(), 200, 20240601).values
    assert abs(v.mean() - 0.051) < 3 * v.std(ddof=1) / math.sqrt(len(v))


@pytest.mark.parametrize("s_hat", [0.01, 0.064, 0.2])
def test_mean_round_trip(s_hat):
    v = sample_lambdas(MortalityParams(sigma_hat=s_hat), 100_000, 3).values
    assert abs(v.mean() - 0.051) < 3 * v.std(ddof=1) / math.sqrt(len(v))


def test_inverse_hazard_variance_near_one():
    assert inverse_hazard_variance(MortalityParams(), 1_000_000, 0) == pytest.approx(1.0, rel=0.05)


def test_projected_qx():
    t = LifeTable(67, [0.02] * 12 + [1.0], {"default": [-1.0] * 13})
    assert projected_qx(t, 10) == pytest.approx(0.02 * 0.99**10, rel=1e-12)
    assert projected_qx(t, 10) == pytest.approx(0.018088, abs=1e-6)
    flat = LifeTable(67, [0.02, 0.03, 1.0])
    assert projected_qx(flat, 1) == 0.03
    seq = [projected_qx(t, k) for k in range(12)]
    assert all(a > b for a, b in zip(seq, seq[1:]))
    with pytest.raises(IndexError):
        projected_qx(t, 13)


def test_projected_qx_capped():
    t = LifeTable(100, [0.9, 1.0], {"default": [50.0, 0.0]})
    assert projected_qx(t, 0) == 0.9
    t = LifeTable(100, [0.9, 0.9, 1.0], {"default": [50.0, 50.0, 0.0]})
    assert projected_qx(t, 1) == 1.0


def test_life_expectancy_conventions():
    assert life_expectancy(LifeTable(67, [1.0])) == 0.5
    # one certain year then death
    assert life_expectancy(LifeTable(67, [0.0, 1.0])) == 1.5
    with pytest.raises(TableFormatError):
        life_expectancy(LifeTable(67, [0.1, 0.2]))


def test_doubling_qx_never_lowers_lambda():
    table = read_life_table(DATA / "life_table.csv")
    base = fit_lambda(life_expectancy(table, "125y"))
    doubled = LifeTable(table.start_age, np.minimum(2 * table.qx, 1.0), table.improvement)
    assert fit_lambda(life_expectancy(doubled, "125y")) >= base


def test_fit_lambda():
    assert fit_lambda(19.42) == pytest.approx(0.0515, abs=5e-5)
    assert round(fit_lambda(19.42), 3) == 0.051
    assert fit_lambda(1.0) == 1.0
    assert fit_lambda(20.30) == pytest.approx(0.0493, abs=5e-5)
    with pytest.raises(ValueError):
        fit_lambda(0.0)


def test_fit_eln_exact():
    t = np.arange(0, 31, 2.0)
    lam, r2 = fit_eln_hazard(t, np.exp(-0.03 * t))
    assert lam == pytest.approx(0.03, abs=1e-8)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_eln_single_point():
    lam, r2 = fit_eln_hazard([10.0], [0.5])
    assert lam == pytest.approx(math.log(2) / 10, abs=1e-8)
    assert math.isnan(r2)


def test_fit_eln_degenerate():
    with pytest.raises(ValueError):
        fit_eln_hazard([0.0, 0.0], [1.0, 0.9])
    with pytest.raises(ValueError):
        fit_eln_hazard([1.0], [0.0])


def test_fit_eln_recovers_random_hazards():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 30, 16)
    for lam in rng.uniform(0.01, 0.2, 20):
        assert fit_eln_hazard(t, np.exp(-lam * t))[0] == pytest.approx(lam, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.005, 0.5), st.floats(0.5, 40))
def test_fit_eln_single_point_property(lam, t):
    got, _ = fit_eln_hazard([t], [math.exp(-lam * t)])
    assert got == pytest.approx(lam, rel=1e-6, abs=1e-9)


def test_read_life_table_fixture():
    table = read_life_table(DATA / "life_table.csv")
    assert table.start_age == 67
    assert table.qx[-1] == 1.0
    assert set(table.improvement) == {"125y", "25y"}
    e125 = life_expectancy(table, "125y")
    e25 = life_expectancy(table, "25y")
    assert 10 < e125 < e25 < 40
    with pytest.raises(KeyError):
        table.factors("50y")


def test_malformed_life_table_reports_row():
    with pytest.raises(TableFormatError, match="row 7"):
        read_life_table(DATA / "life_table_bad.csv")


def test_life_table_header_checked(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("age,q\n67,0.1\n")
    with pytest.raises(TableFormatError, match="header"):
        read_life_table(p)
    p.write_text("age,qx,improvement_pct\n67,0.1,0\n69,1,0\n")
    with pytest.raises(TableFormatError, match="consecutive"):
        read_life_table(p)
    p.write_text("age,qx,improvement_pct\n67,1.5,0\n")
    with pytest.raises(TableFormatError, match="row 2"):
        read_life_table(p)


def test_read_care_table():
    t, p = read_care_table(DATA / "care_table.csv")
    lam, r2 = fit_eln_hazard(t, p)
    assert lam == pytest.approx(0.034, abs=0.002)
    assert 0.9 < r2 <= 1.0


def test_care_table_errors(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("years_since_67,proportion_active\n1,0.9\n2\n")
    with pytest.raises(TableFormatError, match="row 3"):
        read_care_table(p)
    p.write_text("years,p\n1,0.9\n")
    with pytest.raises(TableFormatError):
        read_care_table(p)
