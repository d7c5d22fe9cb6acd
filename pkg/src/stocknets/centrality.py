"""Relative centralities, whole-network centralization, and degree statistics.

All relative measures normalize against the star maximum, so every
centralization equals 1 exactly on a star. Closeness is computed per
connected component (component-local N); betweenness accumulates pair
dependencies over reachable pairs only, with no per-component rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from .errors import DataError, NumericError
from .graph import Network, component_labels, shortest_paths


@dataclass(frozen=True)
class CentralityVector:
    kind: str
    tickers: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.tickers),):
            raise DataError("centrality values must align with tickers")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict[str, float]:
        return {t: float(v) for t, v in zip(self.tickers, self.values)}


@dataclass(frozen=True)
class Centralization:
    degree: float
    betweenness: float
    closeness: float


@dataclass(frozen=True)
class DegreeDistribution:
    """CDF steps at the distinct degrees, plus log-log frequency points.

    ``loglog_points`` holds (ln k, ln P(k)) for every positive degree that
    actually occurs; degree zero cannot appear on a log axis.
    """

    cdf_points: tuple[tuple[int, float], ...]
    loglog_points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PowerLawFit:
    lambda_: float
    xmin: int
    ks_distance: float
    n_tail: int


def _require_undirected(net: Network, what: str) -> None:
    if net.directed:
        raise DataError(f"{what} requires an undirected network")


def relative_degree(net: Network, mode: str | None = None) -> CentralityVector:
    """Degree over N-1. Directed networks must pick mode 'in' or 'out'."""
    if net.n < 2:
        raise DataError("need at least two nodes")
    if net.directed:
        if mode == "in":
            deg = net.in_degrees()
        elif mode == "out":
            deg = net.out_degrees()
        else:
            raise DataError("directed networks report 'in' or 'out' degree")
        kind = f"relative_degree_{mode}"
    else:
        if mode not in (None, "undirected"):
            raise DataError("mode applies to directed networks only")
        deg = net.degrees()
        kind = "relative_degree"
    return CentralityVector(kind, net.tickers, deg / (net.n - 1.0))


def relative_betweenness(net: Network) -> CentralityVector:
    """Brandes pair-dependency accumulation over (N-1)(N-2)/2.

    Level-synchronous variant: breadth-first levels from each source, path
    counts forward, dependencies backward. Unreachable pairs contribute
    nothing. The raw accumulation counts each unordered pair from both ends,
    hence the division by (N-1)(N-2) below.
    """
    _require_undirected(net, "betweenness")
    n = net.n
    if n < 3:
        raise DataError("betweenness needs at least three nodes")
    a = net.adjacency.astype(float)
    acc = np.zeros(n)
    for s in range(n):
        sigma = np.zeros(n)
        sigma[s] = 1.0
        levels = [np.array([s])]
        seen = np.zeros(n, dtype=bool)
        seen[s] = True
        frontier = seen.copy()
        while True:
            nxt = net.adjacency[frontier].any(axis=0) & ~seen
            if not nxt.any():
                break
            idx = np.nonzero(nxt)[0]
            prev = np.nonzero(frontier)[0]
            sigma[idx] = a[np.ix_(idx, prev)] @ sigma[prev]
            levels.append(idx)
            seen |= nxt
            frontier = nxt
        delta = np.zeros(n)
        for depth in range(len(levels) - 1, 0, -1):
            cur = levels[depth]
            prev = levels[depth - 1]
            weight = (1.0 + delta[cur]) / sigma[cur]
            delta[prev] += sigma[prev] * (a[np.ix_(prev, cur)] @ weight)
        delta[s] = 0.0
        acc += delta
    return CentralityVector("relative_betweenness", net.tickers,
                            acc / ((n - 1.0) * (n - 2.0)))


def relative_closeness(net: Network) -> CentralityVector:
    """(n_c - 1) / sum of distances, inside each component; isolated nodes 0."""
    _require_undirected(net, "closeness")
    if net.n < 2:
        raise DataError("need at least two nodes")
    labels = component_labels(net)
    dist = shortest_paths(net)
    values = np.zeros(net.n)
    for comp in np.unique(labels):
        members = np.nonzero(labels == comp)[0]
        nc = len(members)
        if nc < 2:
            continue
        sums = dist[np.ix_(members, members)].sum(axis=1)
        values[members] = (nc - 1.0) / sums
    return CentralityVector("relative_closeness", net.tickers, values)


def centralizations(net: Network) -> Centralization:
    """Star-normalized spread of each centrality across the network.

    degree: sum(max - c_i) / (N - 2)
    betweenness: sum(max - c_i) / (N - 1)
    closeness: sum(max - c_i) * (2N - 3) / ((N - 1)(N - 2))
    """
    _require_undirected(net, "centralization")
    n = net.n
    if n < 3:
        raise DataError("centralization needs at least three nodes")
    cd = relative_degree(net).values
    cb = relative_betweenness(net).values
    cc = relative_closeness(net).values
    return Centralization(
        degree=float((cd.max() - cd).sum() / (n - 2.0)),
        betweenness=float((cb.max() - cb).sum() / (n - 1.0)),
        closeness=float((cc.max() - cc).sum() * (2.0 * n - 3.0)
                        / ((n - 1.0) * (n - 2.0))),
    )


def heterogeneity(degrees: Sequence[int]) -> float:
    """Sum of squared degrees over the squared degree sum.

    1/N for regular graphs, approaching 1 when a single node carries all
    connectivity.
    """
    deg = np.asarray(degrees, dtype=float)
    if deg.size == 0:
        raise DataError("degree list is empty")
    if np.any(deg < 0):
        raise DataError("degrees must be non-negative")
    total = deg.sum()
    if total == 0:
        raise DataError("heterogeneity is undefined when all degrees are zero")
    return float((deg * deg).sum() / (total * total))


def degree_distribution(net: Network) -> DegreeDistribution:
    """Empirical CDF over distinct degrees and (ln k, ln P(k)) points."""
    _require_undirected(net, "degree distribution")
    if net.n < 1:
        raise DataError("need at least one node")
    deg = net.degrees()
    n = net.n
    distinct, counts = np.unique(deg, return_counts=True)
    cum = np.cumsum(counts) / n
    cdf = tuple((int(k), float(c)) for k, c in zip(distinct, cum))
    loglog = tuple(
        (float(np.log(k)), float(np.log(c / n)))
        for k, c in zip(distinct, counts) if k >= 1)
    return DegreeDistribution(cdf, loglog)


def _discrete_mle(tail: np.ndarray, xmin: int) -> float:
    """Exponent maximizing the discrete power-law likelihood on the tail."""
    slog = float(np.log(tail).sum())
    nt = len(tail)

    def nll(lam: float) -> float:
        return nt * float(np.log(zeta(lam, xmin))) + lam * slog

    res = minimize_scalar(nll, bounds=(1.0 + 1e-9, 12.0), method="bounded",
                          options={"xatol": 1e-9})
    if not res.success:
        raise NumericError("power-law likelihood optimization failed")
    return float(res.x)


def _ks_distance(tail: np.ndarray, xmin: int, lam: float) -> float:
    distinct = np.unique(tail)
    emp = np.searchsorted(tail, distinct, side="right") / len(tail)
    fit = 1.0 - zeta(lam, distinct + 1.0) / zeta(lam, xmin)
    return float(np.abs(emp - fit).max())


def fit_power_law(degrees: Sequence[int], xmin: int | None = None) -> PowerLawFit:
    """Discrete power-law fit of the degree tail.

    The exponent maximizes the Hurwitz-zeta likelihood on degrees >= xmin.
    With ``xmin=None`` every distinct positive degree is tried and the one
    minimizing the Kolmogorov-Smirnov distance between the empirical and
    fitted tail CDFs wins (smallest xmin on ties). The tail must hold at
    least two distinct positive degrees.
    """
    deg = np.sort(np.asarray(degrees, dtype=int))
    deg = deg[deg >= 1]
    if xmin is not None:
        if xmin < 1:
            raise DataError("xmin must be a positive integer")
        tail = deg[deg >= xmin].astype(float)
        if len(tail) < 2 or len(np.unique(tail)) < 2:
            raise DataError(
                f"need >= 2 distinct degrees at or above xmin={xmin}")
        lam = _discrete_mle(tail, xmin)
        return PowerLawFit(lam, int(xmin), _ks_distance(tail, xmin, lam), len(tail))

    best: PowerLawFit | None = None
    for cand in np.unique(deg):
        tail = deg[deg >= cand].astype(float)
        if len(tail) < 2 or len(np.unique(tail)) < 2:
            continue
        lam = _discrete_mle(tail, int(cand))
        ksd = _ks_distance(tail, int(cand), lam)
        if best is None or ksd < best.ks_distance:
            best = PowerLawFit(lam, int(cand), ksd, len(tail))
    if best is None:
        raise DataError("no xmin candidate leaves >= 2 distinct positive degrees")
    return best
