"""Permutation-calibrated node-level regression (QAP style).

The dependent variable is a node statistic (typically relative degree);
regressors are per-ticker fundamentals. Significance comes from refitting
under random permutations of the dependent values across tickers, so no
distributional assumption on the errors is needed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping

import numpy as np

from .errors import DataError, NumericError

FUNDAMENTAL_COLUMNS: tuple[str, ...] = (
    "current_ratio", "quick_ratio", "leverage", "turnover", "roe", "market_value",
)


@dataclass(frozen=True)
class RegressionSpec:
    dependent: Mapping[str, float]
    regressors: Mapping[str, Mapping[str, float]]
    top_fraction: float = 1.0
    permutations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.dependent:
            raise DataError("dependent series is empty")
        if not self.regressors:
            raise DataError("at least one regressor is required")
        if not 0.0 < self.top_fraction <= 1.0:
            raise DataError("top_fraction must lie in (0, 1]")
        if self.permutations < 1:
            raise DataError("permutations must be >= 1")
        keys = set(self.dependent)
        for name, series in self.regressors.items():
            if set(series) != keys:
                raise DataError(
                    f"regressor {name} is not aligned with the dependent tickers")
        object.__setattr__(self, "dependent", dict(self.dependent))
        object.__setattr__(self, "regressors",
                           {k: dict(v) for k, v in self.regressors.items()})


@dataclass(frozen=True)
class QapResult:
    coefficients: Mapping[str, float]
    permutation_p: Mapping[str, float]
    r_squared: float
    n_used: int
    permutations_run: int
    seed: int
    top_fraction: float
    # what was shuffled under the null; alternatives (regressor permutation,
    # semi-partialing) are deliberately out of scope
    permuted: str = "dependent"


def significance_stars(p: float) -> str:
    """Conventional star marker: *** below 0.01, ** below 0.05, * below 0.1."""
    if not 0.0 <= p <= 1.0:
        raise DataError("p-value outside [0, 1]")
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def truncate_top(values: Mapping[str, float], fraction: float) -> tuple[str, ...]:
    """Tickers whose value ranks in the top ceil(fraction * N).

    Ties straddling the cut resolve by ticker order. The result is returned
    in ticker order for deterministic downstream design matrices.
    """
    if not 0.0 < fraction <= 1.0:
        raise DataError("fraction must lie in (0, 1]")
    if not values:
        raise DataError("empty value series")
    keep = math.ceil(fraction * len(values))
    ranked = sorted(values, key=lambda t: (-values[t], t))
    return tuple(sorted(ranked[:keep]))


def _collinear_names(design: np.ndarray, names: list[str]) -> list[str]:
    _, sing, vt = np.linalg.svd(design, full_matrices=False)
    null = vt[sing < sing[0] * 1e-10]
    involved = np.abs(null).max(axis=0) > 1e-8 if len(null) else np.zeros(len(names), bool)
    return [n for n, bad in zip(names, involved) if bad]


def qap_regress(spec: RegressionSpec) -> QapResult:
    """OLS on the truncated sample with permutation p-values.

    Regressors are standardized internally (coefficients are reported in
    original units). For each permutation draw the dependent values are
    shuffled across the sampled tickers and the model refit; the two-sided
    p-value for a coefficient is (1 + #{|beta_perm| >= |beta_obs|}) /
    (permutations + 1). Each permutation uses its own pre-split seed stream,
    so results do not depend on evaluation order.
    """
    sample = truncate_top(spec.dependent, spec.top_fraction)
    names = list(spec.regressors)
    n, k = len(sample), len(names)
    if n < k + 2:
        raise DataError(
            f"truncated sample of {n} tickers cannot support {k} regressors")

    y = np.array([spec.dependent[t] for t in sample], dtype=float)
    x = np.column_stack([
        [spec.regressors[name][t] for t in sample] for name in names])

    means = x.mean(axis=0)
    sds = x.std(axis=0, ddof=1)
    flat = sds == 0.0
    if flat.any():
        bad = [n_ for n_, f in zip(names, flat) if f]
        raise NumericError(f"constant regressors on the sample: {bad}")
    z = (x - means) / sds

    design = np.hstack([np.ones((n, 1)), z])
    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        bad = _collinear_names(design[:, 1:], names)
        raise NumericError(f"collinear regressors: {bad or names}")

    solver = np.linalg.pinv(design)  # (k+1) x n, reused for every permutation
    beta_std = solver @ y
    fitted = design @ beta_std
    resid = y - fitted
    tss = float(((y - y.mean()) ** 2).sum())
    if tss == 0.0:
        raise NumericError("dependent variable is constant on the sample")
    r_squared = 1.0 - float((resid ** 2).sum()) / tss

    slopes = beta_std[1:]
    exceed = np.zeros(k, dtype=int)
    children = np.random.SeedSequence(spec.seed).spawn(spec.permutations)
    for child in children:
        perm = np.random.default_rng(child).permutation(n)
        beta_perm = solver @ y[perm]
        exceed += np.abs(beta_perm[1:]) >= np.abs(slopes)
    pvals = (1.0 + exceed) / (spec.permutations + 1.0)

    coefficients = {"intercept": float(
        beta_std[0] - float((slopes * means / sds).sum()))}
    for i, name in enumerate(names):
        coefficients[name] = float(slopes[i] / sds[i])
    return QapResult(
        coefficients=coefficients,
        permutation_p={name: float(p) for name, p in zip(names, pvals)},
        r_squared=r_squared,
        n_used=n,
        permutations_run=spec.permutations,
        seed=spec.seed,
        top_fraction=spec.top_fraction,
    )


def load_fundamentals(source: str | Path | IO[str],
                      columns: tuple[str, ...] = FUNDAMENTAL_COLUMNS,
                      extra: tuple[str, ...] = ()) -> dict[str, dict[str, float]]:
    """Per-regressor ticker series from a fundamentals CSV.

    The file needs a ``ticker`` column plus one column per requested
    regressor; ``extra`` names optional additional columns (for example a
    security-financing measure) that must then be present.
    """
    wanted = tuple(columns) + tuple(extra)
    if hasattr(source, "read"):
        handle, close_after = source, False
    else:
        try:
            handle = open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot read fundamentals CSV: {exc}") from exc
        close_after = True
    try:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError("fundamentals CSV is empty")
        missing = [c for c in ("ticker",) + wanted if c not in reader.fieldnames]
        if missing:
            raise DataError(f"fundamentals CSV missing columns: {missing}")
        series: dict[str, dict[str, float]] = {c: {} for c in wanted}
        for line_no, row in enumerate(reader, start=2):
            ticker = (row.get("ticker") or "").strip()
            if not ticker:
                raise DataError(f"fundamentals CSV line {line_no}: empty ticker")
            for col in wanted:
                try:
                    series[col][ticker] = float(row[col])
                except (TypeError, ValueError):
                    raise DataError(
                        f"fundamentals CSV line {line_no}: bad value for {col}"
                    ) from None
    finally:
        if close_after:
            handle.close()
    if not next(iter(series.values()), {}):
        raise DataError("fundamentals CSV contains no rows")
    return series
