"""Centrality measures, centralization, heterogeneity, power-law fits."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from oracles import (brute_betweenness, brute_closeness,
                     brute_degree_centrality, brute_heterogeneity,
                     centralization_betweenness, centralization_closeness,
                     centralization_degree, sample_power_law)
from stocknets import (DataError, Network, centralizations,
                       degree_distribution, fit_power_law, heterogeneity,
                       relative_betweenness, relative_closeness,
                       relative_degree)
from test_graph import (NAMES, complete_graph, net_from_edges, path_graph,
                        random_adj, star_graph)


def test_relative_degree_hand_values():
    cd = relative_degree(star_graph(5))
    assert cd.values.tolist() == [1.0, 0.25, 0.25, 0.25, 0.25]
    cd = relative_degree(path_graph(4))
    assert np.allclose(cd.values, np.array([1, 2, 2, 1]) / 3.0)
    assert cd.as_dict()["N01"] == pytest.approx(2.0 / 3.0)


def test_relative_degree_directed_modes():
    net = net_from_edges(3, [(0, 1), (2, 1)], directed=True)
    assert relative_degree(net, mode="out").values.tolist() == [0.5, 0.0, 0.5]
    assert relative_degree(net, mode="in").values.tolist() == [0.0, 1.0, 0.0]
    with pytest.raises(DataError, match="'in' or 'out'"):
        relative_degree(net)
    with pytest.raises(DataError, match="directed networks only"):
        relative_degree(path_graph(3), mode="in")


def test_relative_degree_matches_oracle():
    for seed in range(20):
        adj = random_adj(seed + 400)
        net = Network(NAMES[:adj.shape[0]], adj)
        assert np.allclose(relative_degree(net).values,
                           brute_degree_centrality(adj), atol=1e-12)


def test_betweenness_hand_values():
    assert relative_betweenness(path_graph(3)).values.tolist() == [0.0, 1.0, 0.0]
    b = relative_betweenness(path_graph(4)).values
    assert np.allclose(b, [0.0, 2.0 / 3.0, 2.0 / 3.0, 0.0])
    # 4-cycle: each node carries half of one pair's two shortest paths
    c4 = net_from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert np.allclose(relative_betweenness(c4).values, [1.0 / 6.0] * 4)


def test_betweenness_splits_over_equal_paths():
    # diamond: two length-2 routes between 0 and 3, one through each middle
    net = net_from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    b = relative_betweenness(net).values
    assert np.allclose(b, [1.0 / 6.0] * 4)


def test_betweenness_matches_oracle():
    for seed in range(20):
        adj = random_adj(seed + 500)
        net = Network(NAMES[:adj.shape[0]], adj)
        assert np.allclose(relative_betweenness(net).values,
                           brute_betweenness(adj), atol=1e-12)


def test_betweenness_needs_three_nodes():
    with pytest.raises(DataError, match="three nodes"):
        relative_betweenness(net_from_edges(2, [(0, 1)]))


def test_closeness_hand_values():
    cc = relative_closeness(star_graph(5)).values
    assert cc[0] == 1.0
    assert np.allclose(cc[1:], 4.0 / 7.0)
    # distances only count inside a component
    two_pairs = net_from_edges(4, [(0, 1), (2, 3)])
    assert relative_closeness(two_pairs).values.tolist() == [1.0] * 4
    with_isolate = net_from_edges(3, [(0, 1)])
    assert relative_closeness(with_isolate).values.tolist() == [1.0, 1.0, 0.0]


def test_closeness_matches_oracle():
    for seed in range(20):
        adj = random_adj(seed + 600)
        net = Network(NAMES[:adj.shape[0]], adj)
        assert np.allclose(relative_closeness(net).values,
                           brute_closeness(adj), atol=1e-12)


def test_directed_networks_rejected():
    net = net_from_edges(3, [(0, 1), (1, 2)], directed=True)
    for fn in (relative_betweenness, relative_closeness, centralizations,
               degree_distribution):
        with pytest.raises(DataError, match="undirected"):
            fn(net)


def test_star_maximizes_every_centralization():
    c = centralizations(star_graph(5))
    assert c.degree == 1.0
    assert c.betweenness == 1.0
    assert c.closeness == 1.0


def test_complete_graph_centralization_zero():
    c = centralizations(complete_graph(5))
    assert c.degree == 0.0
    assert c.betweenness == 0.0
    assert c.closeness == 0.0


def test_centralizations_match_oracle_formulas():
    for seed in range(15):
        adj = random_adj(seed + 700)
        net = Network(NAMES[:adj.shape[0]], adj)
        c = centralizations(net)
        assert c.degree == pytest.approx(
            centralization_degree(relative_degree(net).values), abs=1e-12)
        assert c.betweenness == pytest.approx(
            centralization_betweenness(relative_betweenness(net).values),
            abs=1e-12)
        assert c.closeness == pytest.approx(
            centralization_closeness(relative_closeness(net).values),
            abs=1e-12)
    with pytest.raises(DataError, match="three nodes"):
        centralizations(net_from_edges(2, [(0, 1)]))


def test_heterogeneity_closed_forms():
    assert heterogeneity([4, 4, 4, 4, 4]) == 0.2
    assert heterogeneity([4, 1, 1, 1, 1]) == 0.3125
    assert heterogeneity([7, 0, 0]) == 1.0


def test_heterogeneity_validation():
    with pytest.raises(DataError, match="empty"):
        heterogeneity([])
    with pytest.raises(DataError, match="non-negative"):
        heterogeneity([2, -1])
    with pytest.raises(DataError, match="all degrees are zero"):
        heterogeneity([0, 0, 0])


@given(st.lists(st.integers(min_value=0, max_value=50), min_size=2,
                max_size=40).filter(lambda d: sum(d) > 0))
@settings(max_examples=120, deadline=None)
def test_heterogeneity_bounds(degrees):
    h = heterogeneity(degrees)
    n = len(degrees)
    assert 1.0 / n - 1e-12 <= h <= 1.0 + 1e-12
    assert h == pytest.approx(brute_heterogeneity(degrees), abs=1e-12)


def test_degree_distribution_star():
    dd = degree_distribution(star_graph(5))
    assert dd.cdf_points == ((1, 0.8), (4, 1.0))
    assert dd.loglog_points == (
        (float(np.log(1)), float(np.log(0.8))),
        (float(np.log(4)), float(np.log(0.2))),
    )


def test_degree_distribution_keeps_zero_off_log_axis():
    dd = degree_distribution(net_from_edges(3, [(0, 1)]))
    assert dd.cdf_points[0][0] == 0
    assert dd.cdf_points[-1] == (1, 1.0)
    assert len(dd.loglog_points) == 1
    assert dd.loglog_points[0][0] == 0.0  # ln 1


def test_power_law_mle_matches_dense_grid():
    rng = np.random.default_rng(99)
    samples = sample_power_law(800, 2.5, 2, rng)
    fit = fit_power_law(samples, xmin=2)
    grid = np.arange(1.5, 4.0, 1e-3)
    tail = np.asarray(samples, dtype=float)
    ll = -len(tail) * np.log(zeta(grid[:, None], 2.0)).ravel() \
        - grid * np.log(tail).sum()
    assert fit.lambda_ == pytest.approx(grid[np.argmax(ll)], abs=1e-3)
    assert fit.xmin == 2
    assert fit.n_tail == len(samples)


def test_power_law_recovers_exponent():
    rng = np.random.default_rng(4)
    samples = sample_power_law(3000, 2.5, 2, rng)
    fit = fit_power_law(samples, xmin=2)
    assert abs(fit.lambda_ - 2.5) < 0.1


def test_power_law_scan_picks_min_ks():
    rng = np.random.default_rng(11)
    tail = sample_power_law(400, 2.2, 3, rng)
    degrees = list(tail) + [1] * 300 + [2] * 60
    scanned = fit_power_law(degrees)
    fixed = []
    for cand in sorted(set(d for d in degrees if d >= 1)):
        kept = [d for d in degrees if d >= cand]
        if len(set(kept)) < 2:
            continue
        fixed.append(fit_power_law(degrees, xmin=cand))
    best = min(fixed, key=lambda f: (f.ks_distance, f.xmin))
    assert scanned == best


def test_power_law_degenerate_inputs():
    with pytest.raises(DataError, match="positive integer"):
        fit_power_law([1, 2, 3], xmin=0)
    with pytest.raises(DataError, match="distinct degrees"):
        fit_power_law([3, 3, 3], xmin=3)
    with pytest.raises(DataError, match="distinct degrees"):
        fit_power_law([1, 2, 3], xmin=4)
    with pytest.raises(DataError, match="no xmin candidate"):
        fit_power_law([5, 5, 5, 5])
