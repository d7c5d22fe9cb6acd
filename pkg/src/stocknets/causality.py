"""Pairwise Granger causality, linear and nonlinear, over a return panel.

The p-value matrix convention: ``p[i, j]`` tests whether ticker j causes
ticker i. The diagonal is fixed at 1. Directed edges run source -> target,
so a network built at level alpha has ``adjacency[j, i]`` set when
``p[i, j] < alpha`` (strictly).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DataError
from .graph import Network
from .ingest import ReturnPanel

DEFAULT_ALPHA_GRID: tuple[float, ...] = (0.2, 0.15, 0.1, 0.075, 0.05, 0.025, 0.01)


@dataclass(frozen=True)
class PValueMatrix:
    tickers: tuple[str, ...]
    p: np.ndarray
    kind: str
    degenerate_pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        n = len(self.tickers)
        if p.shape != (n, n):
            raise DataError(f"p-value matrix shape {p.shape}, expected ({n}, {n})")
        if np.any((p < 0) | (p > 1)):
            raise DataError("p-values must lie in [0, 1]")
        if not np.allclose(p.diagonal(), 1.0):
            raise DataError("diagonal p-values must be 1")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class NonlinearParams:
    """Hiemstra-Jones settings: lead length m, shared embed length for both
    lag vectors, bandwidth on standardized residuals, and the order of the
    bivariate VAR that pre-filters linear structure."""

    lead_lag: int = 1
    embed: int = 1
    bandwidth: float = 1.5
    var_lag: int = 1

    def __post_init__(self):
        if self.lead_lag < 1 or self.embed < 1 or self.var_lag < 1:
            raise DataError("lead_lag, embed and var_lag must be >= 1")
        if self.bandwidth <= 0:
            raise DataError("bandwidth must be positive")


def _lag_design(series: np.ndarray, lag: int) -> np.ndarray:
    """Columns of lagged values: column k holds x_{t-k-1} for target row t."""
    t = len(series)
    return np.column_stack([series[lag - k - 1:t - k - 1] for k in range(lag)])


def _ssr(y: np.ndarray, x: np.ndarray) -> tuple[float, int]:
    beta, res, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < x.shape[1]:
        return float(((y - x @ beta) ** 2).sum()), rank
    if res.size:
        return float(res[0]), rank
    return float(((y - x @ beta) ** 2).sum()), rank


def causal_pvalue(target: np.ndarray, source: np.ndarray, lag: int = 1) -> float:
    """P-value of the F-test that ``source`` Granger-causes ``target``.

    The unrestricted model regresses the target on a constant, its own
    ``lag`` lags, and ``lag`` lags of the source; the restricted model drops
    the source lags. Collinear designs yield 1.0.
    """
    target = np.asarray(target, dtype=float)
    source = np.asarray(source, dtype=float)
    if target.shape != source.shape or target.ndim != 1:
        raise DataError("target and source must be equal-length 1-d series")
    t = len(target)
    if t <= 3 * lag + 2:
        raise DataError(f"need more than {3 * lag + 2} observations for lag={lag}")
    y = target[lag:]
    ones = np.ones((t - lag, 1))
    x_restricted = np.hstack([ones, _lag_design(target, lag)])
    x_full = np.hstack([x_restricted, _lag_design(source, lag)])
    ssr_r, _ = _ssr(y, x_restricted)
    ssr_u, rank = _ssr(y, x_full)
    if rank < x_full.shape[1]:
        return 1.0
    df_resid = len(y) - x_full.shape[1]
    if ssr_u <= 0.0:
        # the source lags complete a perfect fit, or everything was flat
        return 0.0 if ssr_r > 0.0 else 1.0
    f = max(ssr_r - ssr_u, 0.0) / ssr_u / lag * df_resid
    return float(stats.f.sf(f, lag, df_resid))


def granger_linear(returns: ReturnPanel, lag: int = 1,
                   jobs: int = 1) -> PValueMatrix:
    """All ordered-pair linear Granger tests on the panel columns."""
    if lag < 1:
        raise DataError("lag must be >= 1")
    x = returns.returns
    t, n = x.shape
    if t <= 3 * lag + 2:
        raise DataError(f"need more than {3 * lag + 2} observations for lag={lag}")
    if n < 2:
        raise DataError("need at least two tickers")

    ones = np.ones((t - lag, 1))
    lagged = [_lag_design(x[:, j], lag) for j in range(n)]
    p = np.ones((n, n))
    degenerate: list[tuple[str, str]] = []

    def fill_target(i: int) -> list[tuple[str, str]]:
        bad: list[tuple[str, str]] = []
        y = x[lag:, i]
        x_restricted = np.hstack([ones, lagged[i]])
        ssr_r, _ = _ssr(y, x_restricted)
        df_resid = len(y) - (2 * lag + 1)
        for j in range(n):
            if j == i:
                continue
            x_full = np.hstack([x_restricted, lagged[j]])
            ssr_u, rank = _ssr(y, x_full)
            if rank < x_full.shape[1]:
                p[i, j] = 1.0
                bad.append((returns.tickers[i], returns.tickers[j]))
                continue
            if ssr_u <= 0.0:
                p[i, j] = 0.0 if ssr_r > 0.0 else 1.0
                if ssr_r <= 0.0:
                    bad.append((returns.tickers[i], returns.tickers[j]))
                continue
            f = max(ssr_r - ssr_u, 0.0) / ssr_u / lag * df_resid
            p[i, j] = stats.f.sf(f, lag, df_resid)
        return bad

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for bad in pool.map(fill_target, range(n)):
                degenerate.extend(bad)
    else:
        for i in range(n):
            degenerate.extend(fill_target(i))
    return PValueMatrix(returns.tickers, p, "linear", tuple(degenerate))


def _embed_close(series: np.ndarray, offsets: Sequence[int], n_eff: int,
                 start: int, e: float) -> np.ndarray:
    """Pairwise indicator: sup-norm distance of embedded vectors below e."""
    close = np.ones((n_eff, n_eff), dtype=bool)
    for off in offsets:
        v = series[start + off:start + off + n_eff]
        close &= np.abs(v[:, None] - v[None, :]) < e
    return close


def hj_statistic(x: np.ndarray, y: np.ndarray,
                 params: NonlinearParams) -> tuple[float, float]:
    """Hiemstra-Jones statistic and one-sided p for ``y`` driving ``x``.

    Four correlation integrals are estimated with indicator U-statistics:
    C1 joins the (m + L)-length x history with the L-length y history, C2
    the plain L-length histories, C3 and C4 their x-only counterparts. Under
    the null the conditional ratios agree, and sqrt(n) (C1/C2 - C3/C4) is
    asymptotically normal. The variance comes from the delta method with a
    Bartlett long-run covariance of the per-observation influence terms
    (truncation n^(1/4)), which covers dependence left by the VAR filter.
    """
    m, ell, e = params.lead_lag, params.embed, params.bandwidth
    n = len(x)
    start = ell  # first usable index: full lag vector available
    n_eff = n - m + 1 - ell
    if n_eff < 20:
        raise DataError(f"insufficient observations for the embedding ({n_eff})")

    lag_offsets = range(-ell, 0)
    lead_lag_offsets = range(-ell, m)
    x_lag = _embed_close(x, lag_offsets, n_eff, start, e)
    x_lead = _embed_close(x, lead_lag_offsets, n_eff, start, e)
    y_lag = _embed_close(y, lag_offsets, n_eff, start, e)

    ind = np.empty((4, n_eff, n_eff), dtype=float)
    ind[0] = x_lead & y_lag
    ind[1] = x_lag & y_lag
    ind[2] = x_lead
    ind[3] = x_lag
    # row means excluding the diagonal: per-observation influence values
    h = (ind.sum(axis=2) - 1.0) / (n_eff - 1.0)
    c = h.mean(axis=1)
    if c[1] <= 0.0 or c[3] <= 0.0:
        return 0.0, 1.0  # no comparable pairs at this bandwidth

    ratio = c[0] / c[1] - c[2] / c[3]
    grad = np.array([1.0 / c[1], -c[0] / c[1] ** 2, -1.0 / c[3], c[2] / c[3] ** 2])

    centered = h - c[:, None]
    k_max = int(np.floor(n_eff ** 0.25))
    cov = centered @ centered.T / n_eff
    for lag in range(1, k_max + 1):
        w = 1.0 - lag / (k_max + 1.0)
        g = centered[:, lag:] @ centered[:, :-lag].T / n_eff
        cov += w * (g + g.T)
    var = 4.0 * float(grad @ cov @ grad)
    if var <= 0.0:
        return 0.0, 1.0
    stat = float(np.sqrt(n_eff) * ratio / np.sqrt(var))
    return stat, float(stats.norm.sf(stat))


def _var_residuals(target: np.ndarray, source: np.ndarray, lag: int) -> np.ndarray:
    """Residuals of the target equation of the bivariate VAR(lag)."""
    t = len(target)
    y = target[lag:]
    design = np.hstack([np.ones((t - lag, 1)),
                        _lag_design(target, lag), _lag_design(source, lag)])
    beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ beta


def nonlinear_pvalue(target: np.ndarray, source: np.ndarray,
                     params: NonlinearParams = NonlinearParams()) -> float:
    """P-value that ``source`` nonlinearly causes ``target``.

    Both series are filtered through the bivariate VAR of order
    ``params.var_lag``; the Hiemstra-Jones test then runs on the
    standardized residual pair.
    """
    target = np.asarray(target, dtype=float)
    source = np.asarray(source, dtype=float)
    if target.shape != source.shape or target.ndim != 1:
        raise DataError("target and source must be equal-length 1-d series")
    if np.std(target) == 0.0 or np.std(source) == 0.0:
        raise DataError("constant series cannot be tested")
    res_t = _var_residuals(target, source, params.var_lag)
    res_s = _var_residuals(source, target, params.var_lag)
    sd_t, sd_s = res_t.std(ddof=1), res_s.std(ddof=1)
    if sd_t == 0.0 or sd_s == 0.0:
        raise DataError("degenerate residuals: no variation after filtering")
    _, p = hj_statistic(res_t / sd_t, res_s / sd_s, params)
    return p


def granger_nonlinear(returns: ReturnPanel,
                      params: NonlinearParams = NonlinearParams(),
                      jobs: int = 1) -> PValueMatrix:
    """All ordered-pair nonlinear tests on the panel columns."""
    x = returns.returns
    t, n = x.shape
    if n < 2:
        raise DataError("need at least two tickers")
    flat = x.std(axis=0) == 0.0
    if flat.any():
        bad = [tk for tk, f in zip(returns.tickers, flat) if f]
        raise DataError(f"constant return columns: {bad}")

    p = np.ones((n, n))

    def fill_target(i: int) -> None:
        for j in range(n):
            if j == i:
                continue
            p[i, j] = nonlinear_pvalue(x[:, i], x[:, j], params)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(fill_target, range(n)))
    else:
        for i in range(n):
            fill_target(i)
    return PValueMatrix(returns.tickers, p, "nonlinear")


def causality_network(pvalues: PValueMatrix, alpha: float) -> Network:
    """Directed network with an edge source -> target where p < alpha."""
    if not 0.0 < alpha <= 1.0:
        raise DataError(f"alpha must lie in (0, 1], got {alpha}")
    adj = (pvalues.p < alpha).T  # p[i, j] < alpha means edge j -> i
    np.fill_diagonal(adj, False)
    return Network(pvalues.tickers, adj, directed=True)


def directed_density(net: Network) -> float:
    """Edges over N(N-1) ordered pairs."""
    if not net.directed:
        raise DataError("directed density applies to directed networks")
    n = net.n
    if n < 2:
        raise DataError("need at least two nodes")
    return float(net.adjacency.sum() / (n * (n - 1.0)))


def density_sweep(pvalues: PValueMatrix,
                  alphas: Sequence[float] = DEFAULT_ALPHA_GRID) -> dict[float, float]:
    """Directed density of the causality network at each significance level."""
    return {float(a): directed_density(causality_network(pvalues, a))
            for a in alphas}
