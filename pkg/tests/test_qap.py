"""Cross-sectional permutation regressions on node-level statistics."""

import io

import numpy as np
import pytest

from oracles import ols_fit
from stocknets import (DataError, NumericError, RegressionSpec, load_fundamentals,
                       qap_regress, significance_stars, truncate_top)
from stocknets.qap import FUNDAMENTAL_COLUMNS

TICKERS = tuple(f"T{i:02d}" for i in range(60))


def series(values, tickers=None):
    tickers = tickers or TICKERS[:len(values)]
    return dict(zip(tickers, values))


def base_spec(seed=0, n=40, perms=200, **kwargs):
    rng = np.random.default_rng(123)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    y = 1.5 + 2.0 * x1 - 0.7 * x2 + 0.3 * rng.normal(size=n)
    return RegressionSpec(
        dependent=series(y),
        regressors={"x1": series(x1), "x2": series(x2)},
        permutations=perms,
        seed=seed,
        **kwargs,
    ), y, x1, x2


def test_truncate_top_ceil_and_order():
    vals = series([5.0, 3.0, 9.0, 1.0, 7.0, 6.0, 2.0, 8.0, 4.0, 0.0])
    assert truncate_top(vals, 0.25) == ("T02", "T04", "T07")
    assert truncate_top(vals, 1.0) == tuple(sorted(vals))
    assert truncate_top(vals, 0.05) == ("T02",)


def test_truncate_top_ties_resolve_by_ticker():
    vals = {"B": 1.0, "A": 1.0, "C": 1.0, "D": 0.0}
    assert truncate_top(vals, 0.5) == ("A", "B")


def test_truncate_top_validation():
    with pytest.raises(DataError, match="fraction"):
        truncate_top({"A": 1.0}, 0.0)
    with pytest.raises(DataError, match="fraction"):
        truncate_top({"A": 1.0}, 1.1)
    with pytest.raises(DataError, match="empty"):
        truncate_top({}, 0.5)


def test_significance_stars_boundaries():
    assert significance_stars(0.009) == "***"
    assert significance_stars(0.01) == "**"
    assert significance_stars(0.049) == "**"
    assert significance_stars(0.05) == "*"
    assert significance_stars(0.099) == "*"
    assert significance_stars(0.1) == ""
    assert significance_stars(1.0) == ""
    with pytest.raises(DataError, match="outside"):
        significance_stars(-0.1)
    with pytest.raises(DataError, match="outside"):
        significance_stars(1.5)


def test_qap_coefficients_match_ols_oracle():
    spec, y, x1, x2 = base_spec()
    result = qap_regress(spec)
    beta, r2 = ols_fit(y, np.column_stack([x1, x2]))
    assert result.coefficients["intercept"] == pytest.approx(beta[0], abs=1e-8)
    assert result.coefficients["x1"] == pytest.approx(beta[1], abs=1e-8)
    assert result.coefficients["x2"] == pytest.approx(beta[2], abs=1e-8)
    assert result.r_squared == pytest.approx(r2, abs=1e-10)
    assert result.n_used == 40
    assert result.permutations_run == 200
    assert result.permuted == "dependent"


def test_qap_truncation_reruns_ols_on_top_slice():
    spec, y, x1, x2 = base_spec(top_fraction=0.5)
    result = qap_regress(spec)
    order = sorted(series(y), key=lambda t: (-series(y)[t], t))[:20]
    idx = sorted(TICKERS.index(t) for t in order)
    beta, r2 = ols_fit(y[idx], np.column_stack([x1[idx], x2[idx]]))
    assert result.n_used == 20
    assert result.coefficients["x1"] == pytest.approx(beta[1], abs=1e-8)
    assert result.r_squared == pytest.approx(r2, abs=1e-10)


def test_qap_permutation_p_on_exact_grid():
    spec, *_ = base_spec(perms=250)
    result = qap_regress(spec)
    for p in result.permutation_p.values():
        k = p * 251.0
        assert k == pytest.approx(round(k), abs=1e-9)
        assert 1.0 / 251.0 <= p <= 1.0


def test_qap_strong_signal_hits_resolution_floor():
    rng = np.random.default_rng(7)
    x = rng.normal(size=60)
    y = 3.0 * x + 0.01 * rng.normal(size=60)
    spec = RegressionSpec(dependent=series(y), regressors={"x": series(x)},
                          permutations=1000, seed=0)
    result = qap_regress(spec)
    assert result.permutation_p["x"] == 1.0 / 1001.0


def test_qap_seed_reproducibility():
    spec, *_ = base_spec(seed=42)
    a = qap_regress(spec)
    b = qap_regress(spec)
    assert a == b
    assert a.seed == 42 and a.top_fraction == 1.0


def test_qap_rescaled_regressor_rescales_slope_only():
    spec, y, x1, x2 = base_spec()
    scaled = RegressionSpec(
        dependent=series(y),
        regressors={"x1": series(4.0 * x1), "x2": series(x2)},
        permutations=200, seed=0)
    a = qap_regress(spec)
    b = qap_regress(scaled)
    assert b.coefficients["x1"] == a.coefficients["x1"] / 4.0
    assert b.permutation_p == a.permutation_p
    assert b.r_squared == a.r_squared


def test_qap_degenerate_designs():
    rng = np.random.default_rng(9)
    x = rng.normal(size=30)
    y = rng.normal(size=30)
    with pytest.raises(NumericError, match="constant regressors.*flat"):
        qap_regress(RegressionSpec(series(y), {"flat": series(np.ones(30)),
                                               "x": series(x)}))
    with pytest.raises(NumericError, match="collinear"):
        qap_regress(RegressionSpec(series(y), {"a": series(x),
                                               "b": series(2.0 * x)}))
    with pytest.raises(NumericError, match="dependent variable is constant"):
        qap_regress(RegressionSpec(series(np.full(30, 2.0)),
                                   {"x": series(x)}))


def test_qap_sample_too_small():
    with pytest.raises(DataError, match="cannot support"):
        qap_regress(RegressionSpec(series([1.0, 2.0]),
                                   {"x": series([0.5, 0.7])}))


def test_regression_spec_validation():
    x = series([1.0, 2.0, 3.0])
    with pytest.raises(DataError, match="dependent series is empty"):
        RegressionSpec({}, {"x": x})
    with pytest.raises(DataError, match="at least one regressor"):
        RegressionSpec(x, {})
    with pytest.raises(DataError, match="top_fraction"):
        RegressionSpec(x, {"x": x}, top_fraction=0.0)
    with pytest.raises(DataError, match="permutations"):
        RegressionSpec(x, {"x": x}, permutations=0)
    with pytest.raises(DataError, match="not aligned"):
        RegressionSpec(x, {"x": series([1.0, 2.0])})


def test_load_fundamentals_happy_path():
    header = "ticker," + ",".join(FUNDAMENTAL_COLUMNS)
    text = header + "\nA,1,2,3,4,5,6\nB,0.1,0.2,0.3,0.4,0.5,0.6\n"
    series_map = load_fundamentals(io.StringIO(text))
    assert set(series_map) == set(FUNDAMENTAL_COLUMNS)
    assert series_map["roe"] == {"A": 5.0, "B": 0.5}
    with_extra = header + ",financing\nA,1,2,3,4,5,6,9\n"
    out = load_fundamentals(io.StringIO(with_extra), extra=("financing",))
    assert out["financing"] == {"A": 9.0}


def test_load_fundamentals_errors(tmp_path):
    with pytest.raises(DataError, match="missing columns.*financing"):
        load_fundamentals(
            io.StringIO("ticker," + ",".join(FUNDAMENTAL_COLUMNS) + "\n"),
            extra=("financing",))
    with pytest.raises(DataError, match="missing columns"):
        load_fundamentals(io.StringIO("ticker,roe\nA,1\n"))
    header = "ticker," + ",".join(FUNDAMENTAL_COLUMNS)
    with pytest.raises(DataError, match="line 2: empty ticker"):
        load_fundamentals(io.StringIO(header + "\n,1,2,3,4,5,6\n"))
    with pytest.raises(DataError, match="line 3: bad value for leverage"):
        load_fundamentals(
            io.StringIO(header + "\nA,1,2,3,4,5,6\nB,1,2,oops,4,5,6\n"))
    with pytest.raises(DataError, match="no rows"):
        load_fundamentals(io.StringIO(header + "\n"))
    with pytest.raises(DataError, match="is empty"):
        load_fundamentals(io.StringIO(""))
    with pytest.raises(DataError, match="cannot read fundamentals"):
        load_fundamentals(tmp_path / "nope.csv")
