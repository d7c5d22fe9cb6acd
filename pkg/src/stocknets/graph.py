"""Threshold networks and their basic topology.

Adjacency is boolean with an empty diagonal. Undirected networks are stored
symmetrically; directed ones (causality graphs) use row -> column orientation:
``adjacency[i, j]`` is an edge from ticker i to ticker j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationMatrix
from .errors import DataError


@dataclass(frozen=True)
class Network:
    tickers: tuple[str, ...]
    adjacency: np.ndarray
    directed: bool = False

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.dtype != bool:
            adj = adj.astype(bool)
        n = len(self.tickers)
        if adj.shape != (n, n):
            raise DataError(f"adjacency shape {adj.shape}, expected ({n}, {n})")
        if adj.diagonal().any():
            raise DataError("self-loops are not allowed")
        if not self.directed and not np.array_equal(adj, adj.T):
            raise DataError("undirected adjacency must be symmetric")
        adj = adj.copy()
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)

    @property
    def n(self) -> int:
        return len(self.tickers)

    @property
    def n_edges(self) -> int:
        total = int(self.adjacency.sum())
        return total if self.directed else total // 2

    def degrees(self) -> np.ndarray:
        if self.directed:
            raise DataError("plain degree is undefined for directed networks")
        return self.adjacency.sum(axis=1).astype(int)

    def out_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(int)

    def in_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0).astype(int)

    def edge_list(self) -> list[tuple[str, str]]:
        rows, cols = np.nonzero(self.adjacency)
        if self.directed:
            return [(self.tickers[i], self.tickers[j]) for i, j in zip(rows, cols)]
        return [(self.tickers[i], self.tickers[j])
                for i, j in zip(rows, cols) if i < j]


@dataclass(frozen=True)
class TopologySummary:
    n_nodes: int
    n_edges: int
    density: float
    clustering: float
    avg_path_length: float
    diameter: int
    n_components: int
    largest_component: int


def build_network(matrix: CorrelationMatrix, theta: float) -> Network:
    """Undirected network with an edge wherever |rho| >= theta (ties are edges)."""
    if not 0.0 <= theta <= 1.0:
        raise DataError(f"theta must lie in [0, 1], got {theta}")
    adj = matrix.abs_rho >= theta
    np.fill_diagonal(adj, False)
    return Network(matrix.tickers, adj, directed=False)


def _component_labels(adj: np.ndarray) -> np.ndarray:
    """Connected-component label per node for a symmetric boolean adjacency."""
    n = adj.shape[0]
    labels = np.full(n, -1, dtype=int)
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        member = np.zeros(n, dtype=bool)
        member[start] = True
        frontier = member.copy()
        while frontier.any():
            nxt = adj[frontier].any(axis=0) & ~member
            member |= nxt
            frontier = nxt
        labels[member] = current
        current += 1
    return labels


def _scc_labels(adj: np.ndarray) -> np.ndarray:
    """Strongly connected component labels via an iterative Tarjan walk."""
    n = adj.shape[0]
    succ = [np.nonzero(adj[v])[0] for v in range(n)]
    index = np.full(n, -1, dtype=int)
    low = np.zeros(n, dtype=int)
    on_stack = np.zeros(n, dtype=bool)
    labels = np.full(n, -1, dtype=int)
    stack: list[int] = []
    counter = 0
    n_comps = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work.pop()
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for k in range(pi, len(succ[v])):
                w = int(succ[v][k])
                if index[w] < 0:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    labels[w] = n_comps
                    if w == v:
                        break
                n_comps += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return labels


def component_labels(net: Network) -> np.ndarray:
    if net.directed:
        return _scc_labels(net.adjacency)
    return _component_labels(net.adjacency)


def components(net: Network) -> tuple[tuple[str, ...], ...]:
    """Node partition: connected components, or strongly connected ones when
    directed. Components are ordered by their smallest node index."""
    labels = component_labels(net)
    order: dict[int, list[str]] = {}
    for i, lab in enumerate(labels):
        order.setdefault(int(lab), []).append(net.tickers[i])
    keyed = sorted(order.items(), key=lambda kv: net.tickers.index(kv[1][0]))
    return tuple(tuple(members) for _, members in keyed)


def largest_component_count(matrix: CorrelationMatrix, theta: float) -> int:
    """Node count of the largest connected component of the theta network."""
    labels = _component_labels(build_network(matrix, theta).adjacency)
    return int(np.bincount(labels).max())


def shortest_paths(net: Network) -> np.ndarray:
    """All-pairs hop distances; np.inf marks unreachable pairs."""
    n = net.n
    adj = net.adjacency
    dist = np.full((n, n), np.inf)
    for s in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[s] = True
        dist[s, s] = 0.0
        frontier = seen.copy()
        d = 0
        while frontier.any():
            d += 1
            nxt = adj[frontier].any(axis=0) & ~seen
            if not nxt.any():
                break
            dist[s, nxt] = d
            seen |= nxt
            frontier = nxt
    return dist


def _triangle_counts(adj: np.ndarray) -> np.ndarray:
    a = adj.astype(float)
    return np.einsum("ij,jk,ki->i", a, a, a) / 2.0


def clustering_coefficients(net: Network) -> np.ndarray:
    """Per-node clustering 2*n_i / (k_i (k_i - 1)); zero when degree < 2."""
    if net.directed:
        raise DataError("clustering is defined for undirected networks")
    deg = net.degrees().astype(float)
    tri = _triangle_counts(net.adjacency)
    out = np.zeros(net.n)
    mask = deg >= 2
    out[mask] = 2.0 * tri[mask] / (deg[mask] * (deg[mask] - 1.0))
    return out


def topology_summary(net: Network) -> TopologySummary:
    """Density, mean clustering, and largest-component path statistics.

    Average path length is the mean hop distance over unordered reachable
    pairs inside the largest component; the diameter is the longest such
    distance. A trivial largest component yields zero for both.
    """
    if net.directed:
        raise DataError("topology summary is defined for undirected networks")
    n = net.n
    if n < 2:
        raise DataError("need at least two nodes")
    labels = _component_labels(net.adjacency)
    sizes = np.bincount(labels)
    largest = int(sizes.max())
    n_comp = len(sizes)

    clustering = float(clustering_coefficients(net).mean())
    density = 2.0 * net.n_edges / (n * (n - 1))

    if largest < 2:
        apl, diameter = 0.0, 0
    else:
        members = np.nonzero(labels == int(sizes.argmax()))[0]
        sub = Network(tuple(net.tickers[i] for i in members),
                      net.adjacency[np.ix_(members, members)])
        dist = shortest_paths(sub)
        iu = np.triu_indices(len(members), 1)
        pair_d = dist[iu]
        apl = float(pair_d.mean())
        diameter = int(pair_d.max())

    return TopologySummary(
        n_nodes=n,
        n_edges=net.n_edges,
        density=float(density),
        clustering=clustering,
        avg_path_length=apl,
        diameter=diameter,
        n_components=int(n_comp),
        largest_component=largest,
    )


def skeleton(net: Network) -> Network:
    """Undirected view of a directed network: edge if either direction exists."""
    if not net.directed:
        return net
    sym = net.adjacency | net.adjacency.T
    return Network(net.tickers, sym, directed=False)
