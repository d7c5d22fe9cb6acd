"""The three-step uniform threshold selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stocknets import (CorrelationMatrix, CorrSummary, DataError, Interval,
                       NumericError, component_profile, refine_threshold,
                       select_coarse_interval, shared_sigma_interval)
from stocknets.threshold import ComponentProfile


def corr_from_pairs(n, pairs):
    """Correlation matrix with the given (i, j, value) pairs, zero elsewhere."""
    rho = np.eye(n)
    for i, j, v in pairs:
        rho[i, j] = rho[j, i] = v
    return CorrelationMatrix(tuple(f"N{i:02d}" for i in range(n)), rho)


def test_interval_basics():
    iv = Interval(0.2, 0.5)
    assert iv.width == pytest.approx(0.3)
    assert iv.contains(0.2) and iv.contains(0.5) and not iv.contains(0.51)
    with pytest.raises(NumericError, match="empty interval"):
        Interval(0.5, 0.5)
    with pytest.raises(NumericError, match="finite"):
        Interval(0.0, float("inf"))


def test_shared_sigma_interval_max_mu_min_hi():
    summaries = {
        "A": CorrSummary.from_moments(0.30, 0.10),  # hi3 0.60
        "B": CorrSummary.from_moments(0.40, 0.05),  # hi3 0.55
    }
    iv = shared_sigma_interval(summaries)
    assert iv.lo == 0.40
    assert iv.hi == pytest.approx(0.55)


def test_shared_sigma_interval_uses_stored_bounds():
    # carried-verbatim bounds win over anything recomputable from mu/sigma
    summaries = {
        "A": CorrSummary(0.30, 0.10, 0.0, 0.58),
        "B": CorrSummary(0.40, 0.05, 0.25, 0.70),
    }
    iv = shared_sigma_interval(summaries)
    assert (iv.lo, iv.hi) == (0.40, 0.58)


def test_shared_sigma_interval_errors():
    with pytest.raises(DataError, match="at least one"):
        shared_sigma_interval({})
    disjoint = {
        "A": CorrSummary.from_moments(0.70, 0.01),
        "B": CorrSummary.from_moments(0.20, 0.05),  # hi3 0.35 < 0.70
    }
    with pytest.raises(NumericError, match="do not overlap"):
        shared_sigma_interval(disjoint)


def test_component_profile_counts():
    # chain 0-1-2-3 with descending strengths 0.65, 0.55, 0.45
    m = corr_from_pairs(4, [(0, 1, 0.65), (1, 2, 0.55), (2, 3, 0.45)])
    profile = component_profile({"S": m}, grid=(0.4, 0.5, 0.6, 0.7))
    assert profile.counts["S"] == (4, 3, 2, 1)


def test_component_profile_threshold_tie_keeps_edge():
    m = corr_from_pairs(2, [(0, 1, 0.5)])
    profile = component_profile({"S": m}, grid=(0.5, 0.6))
    assert profile.counts["S"] == (2, 1)  # |rho| == theta still connects


def test_component_profile_validation():
    m = corr_from_pairs(3, [(0, 1, 0.5)])
    with pytest.raises(DataError, match="at least one stage"):
        component_profile({})
    with pytest.raises(DataError, match="strictly increasing"):
        component_profile({"S": m}, grid=(0.5, 0.5))
    with pytest.raises(DataError, match="non-increasing"):
        ComponentProfile((0.2, 0.4), {"S": (3, 4)})


def test_select_coarse_interval_steepest_cell():
    profile = ComponentProfile(
        (0.2, 0.4, 0.6, 0.8),
        {"X": (10, 8, 3, 1), "Y": (10, 9, 5, 5)})
    # summed drops per cell: 3, 9, 2 -> cell [0.4, 0.6]
    iv = select_coarse_interval(profile, Interval(0.3, 0.7))
    assert (iv.lo, iv.hi) == (0.4, 0.6)


def test_select_coarse_interval_clips_to_sigma_interval():
    profile = ComponentProfile(
        (0.2, 0.4, 0.6, 0.8), {"X": (10, 10, 2, 2)})
    iv = select_coarse_interval(profile, Interval(0.45, 0.55))
    assert (iv.lo, iv.hi) == (0.45, 0.55)


def test_select_coarse_interval_tie_takes_lowest_cell():
    profile = ComponentProfile(
        (0.2, 0.4, 0.6, 0.8), {"X": (10, 6, 2, 2)})  # drops 4, 4, 0
    iv = select_coarse_interval(profile, Interval(0.2, 0.8))
    assert (iv.lo, iv.hi) == (0.2, 0.4)


def test_select_coarse_interval_errors():
    profile = ComponentProfile((0.4, 0.6), {"X": (5, 2)})
    with pytest.raises(DataError, match="does not span"):
        select_coarse_interval(profile, Interval(0.3, 0.5))
    profile = ComponentProfile(
        (0.2, 0.4, 0.6), {"X": (9, 2, 2)})  # winner [0.2, 0.4]
    with pytest.raises(NumericError, match="does not intersect"):
        select_coarse_interval(profile, Interval(0.45, 0.55))


def descending_chain():
    """Ten-node path losing one tail edge per 0.01 step above 0.40.

    Edge strengths descend from 0.495 at one end to 0.405 at the other,
    skipping the 0.45..0.46 band, so exactly that refinement cell is stable.
    """
    values = [0.495, 0.485, 0.475, 0.465, 0.445, 0.435, 0.425, 0.415, 0.405]
    pairs = [(i, i + 1, v) for i, v in enumerate(values)]
    return corr_from_pairs(10, pairs)


def test_refine_threshold_single_round_picks_stable_cell():
    decision = refine_threshold(
        {"S": descending_chain()}, Interval(0.4, 0.5), d_final=0.01)
    assert len(decision.rounds) == 1
    r = decision.rounds[0]
    assert r.selected == 5
    assert r.scores[5] == 0
    assert all(s == 1 for i, s in enumerate(r.scores) if i != 5)
    assert decision.theta0 == pytest.approx(0.45, abs=1e-9)
    assert decision.theta0 == decision.trace[-1].interval.lo


def test_refine_threshold_flat_scores_resolve_low():
    # nothing changes anywhere, so every round keeps the lowest tenth
    quiet = corr_from_pairs(5, [(0, 1, 0.95), (2, 3, 0.2)])
    decision = refine_threshold({"S": quiet}, Interval(0.6, 0.7))
    assert decision.theta0 == 0.6  # bit-exact: lower endpoint carried through
    assert all(r.selected == 0 for r in decision.rounds)
    assert all(step.score == 0 for step in decision.trace)


def test_refine_threshold_runs_the_final_precision_round():
    # width 0.1 with d_final 1e-4 must run d = 0.01, 0.001, 0.0001; the last
    # step lands a few ulps under 1e-4 and may not be silently dropped
    quiet = corr_from_pairs(4, [(0, 1, 0.9)])
    decision = refine_threshold({"S": quiet}, Interval(0.6, 0.7), d_final=1e-4)
    assert len(decision.rounds) == 3
    steps = [r.step for r in decision.rounds]
    assert steps[0] == pytest.approx(0.01, rel=1e-9)
    assert steps[2] == pytest.approx(1e-4, rel=1e-9)
    assert decision.trace[-1].interval.width == pytest.approx(1e-4, rel=1e-6)


def test_refine_threshold_rounds_scale_with_width():
    quiet = corr_from_pairs(4, [(0, 1, 0.99)])
    one = refine_threshold({"S": quiet}, Interval(0.5, 0.5001), d_final=1e-5)
    assert len(one.rounds) == 1
    deep = refine_threshold({"S": quiet}, Interval(0.0, 1.0), d_final=1e-4)
    assert len(deep.rounds) == 4  # 0.1, 0.01, 0.001, 0.0001


def test_refine_threshold_deterministic():
    m = {"S": descending_chain()}
    a = refine_threshold(m, Interval(0.4, 0.5))
    b = refine_threshold(m, Interval(0.4, 0.5))
    assert a == b


def test_refine_threshold_errors():
    with pytest.raises(DataError, match="at least one stage"):
        refine_threshold({}, Interval(0.4, 0.5))
    m = {"S": corr_from_pairs(3, [])}
    with pytest.raises(NumericError, match="positive"):
        refine_threshold(m, Interval(0.4, 0.5), d_final=0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_refine_threshold_nesting_invariant(seed):
    """Each round's winner nests inside the previous one and holds theta0."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(-0.9, 0.9, size=(12, 12))
    rho = np.triu(base, 1)
    rho = rho + rho.T
    np.fill_diagonal(rho, 1.0)
    m = {"S": CorrelationMatrix(tuple(f"N{i}" for i in range(12)), rho)}
    decision = refine_threshold(m, Interval(0.2, 0.8), d_final=1e-3)
    assert decision.trace
    for step in decision.trace:
        assert step.interval.contains(decision.theta0)
    for a, b in zip(decision.trace, decision.trace[1:]):
        assert a.interval.lo <= b.interval.lo
        assert b.interval.hi <= a.interval.hi
    assert decision.theta0 == decision.trace[-1].interval.lo
    last = decision.trace[-1].step
    assert last >= 1e-3 * (1.0 - 1e-9)
    assert last / 10.0 < 1e-3
