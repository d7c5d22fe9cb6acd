"""Pearson correlation matrices per stage and their 3-sigma summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DataError
from .ingest import ReturnPanel


@dataclass(frozen=True)
class CorrelationMatrix:
    tickers: tuple[str, ...]
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        n = len(self.tickers)
        if rho.shape != (n, n):
            raise DataError(f"correlation matrix shape {rho.shape}, expected ({n}, {n})")
        if not np.array_equal(rho, rho.T):
            raise DataError("correlation matrix must be exactly symmetric")
        if np.abs(rho).max(initial=0.0) > 1.0 + 1e-12:
            raise DataError("correlation entries must lie in [-1, 1]")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return len(self.tickers)

    @property
    def abs_rho(self) -> np.ndarray:
        return np.abs(self.rho)

    def offdiag_abs(self) -> np.ndarray:
        """The N(N-1)/2 upper-triangle |rho| values."""
        iu = np.triu_indices(self.n, 1)
        return np.abs(self.rho[iu])


@dataclass(frozen=True)
class CorrSummary:
    """Moments of the off-diagonal |rho| values plus the [mu, mu+3sigma] bounds.

    lo3/hi3 are stored rather than recomputed so that externally reported
    summaries can be carried verbatim.
    """

    mu: float
    sigma: float
    lo3: float
    hi3: float

    def __post_init__(self):
        if self.sigma < 0:
            raise DataError("sigma must be non-negative")
        if not (self.lo3 <= self.mu <= self.hi3):
            raise DataError("bounds must bracket mu")

    @classmethod
    def from_moments(cls, mu: float, sigma: float) -> "CorrSummary":
        return cls(mu, sigma, mu - 3.0 * sigma, mu + 3.0 * sigma)


def pearson_matrix(returns: ReturnPanel) -> CorrelationMatrix:
    """Sample Pearson correlation of the return columns.

    Each unordered pair is computed once and mirrored, so the result is
    exactly symmetric. Zero-variance columns are rejected by name.
    """
    x = returns.returns
    t, n = x.shape
    if t < 3:
        raise DataError(f"need at least 3 observations, got {t}")
    # constancy is checked on the raw values: centering a constant nonzero
    # column leaves float-mean dust, so a zero-norm test would miss it
    flat = (x == x[0]).all(axis=0)
    if flat.any():
        bad = [tk for tk, f in zip(returns.tickers, flat) if f]
        raise DataError(f"zero-variance return columns: {bad}")
    z = x - x.mean(axis=0)
    norms = np.sqrt((z * z).sum(axis=0))
    cross = z.T @ z
    denom = np.outer(norms, norms)
    upper = np.triu(cross / denom, 1)
    rho = upper + upper.T
    np.fill_diagonal(rho, 1.0)
    # guard against rounding just past unit magnitude
    np.clip(rho, -1.0, 1.0, out=rho)
    return CorrelationMatrix(returns.tickers, rho)


def corr_summary(matrix: CorrelationMatrix) -> CorrSummary:
    """Mean and unbiased standard deviation of the off-diagonal |rho| values."""
    vals = matrix.offdiag_abs()
    if len(vals) < 2:
        raise DataError("need at least 3 tickers for a correlation summary")
    mu = float(vals.mean())
    sigma = float(vals.std(ddof=1))
    return CorrSummary.from_moments(mu, sigma)


def stage_matrices(slices: Mapping[str, ReturnPanel]) -> dict[str, CorrelationMatrix]:
    return {name: pearson_matrix(panel) for name, panel in slices.items()}


def stage_summaries(matrices: Mapping[str, CorrelationMatrix]) -> dict[str, CorrSummary]:
    return {name: corr_summary(m) for name, m in matrices.items()}
