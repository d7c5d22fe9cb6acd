"""Uniform threshold selection for stage-sliced correlation networks.

Three steps share one goal: a single theta usable across all stages.

1. ``shared_sigma_interval`` intersects the per-stage [mu, mu + 3 sigma]
   ranges of the off-diagonal |rho| values.
2. ``select_coarse_interval`` walks a coarse grid of candidate thresholds,
   finds the consecutive cell where the largest connected component collapses
   hardest (summed over stages), and intersects that cell with step 1.
3. ``refine_threshold`` repeatedly partitions the surviving interval into ten
   subintervals, keeps the one where largest-component counts change least
   across stages (the most stable), and shrinks the step tenfold until it
   drops below ``d_final``. Theta is the lower endpoint of the final
   subinterval; ties always resolve toward the lower subinterval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .correlation import CorrelationMatrix, CorrSummary
from .errors import DataError, NumericError
from .graph import largest_component_count

DEFAULT_GRID: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_D_FINAL = 1e-4


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise NumericError("interval endpoints must be finite")
        if self.lo >= self.hi:
            raise NumericError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class ComponentProfile:
    """Largest-component node counts per stage along a threshold grid."""

    grid: tuple[float, ...]
    counts: Mapping[str, tuple[int, ...]]

    def __post_init__(self):
        if len(self.grid) < 2 or any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise DataError("grid must be strictly increasing with >= 2 points")
        for stage, row in self.counts.items():
            if len(row) != len(self.grid):
                raise DataError(f"stage {stage}: counts do not match the grid")
            if any(b > a for a, b in zip(row, row[1:])):
                raise DataError(f"stage {stage}: counts must be non-increasing")
        object.__setattr__(self, "counts", dict(self.counts))


@dataclass(frozen=True)
class RefinementStep:
    """The winning subinterval of one refinement round."""

    interval: Interval
    step: float
    counts: Mapping[str, tuple[int, int]]
    score: int


@dataclass(frozen=True)
class RefinementRound:
    """Everything evaluated in one round: the ten candidate subintervals."""

    step: float
    endpoints: tuple[float, ...]
    counts: Mapping[str, tuple[int, ...]]
    scores: tuple[int, ...]
    selected: int


@dataclass(frozen=True)
class ThresholdDecision:
    theta0: float
    interval: Interval
    trace: tuple[RefinementStep, ...]
    rounds: tuple[RefinementRound, ...]

    def __post_init__(self):
        for step in self.trace:
            if not step.interval.contains(self.theta0):
                raise NumericError("theta0 must lie inside every trace interval")


def shared_sigma_interval(summaries: Mapping[str, CorrSummary]) -> Interval:
    """Intersection over stages of [mu, mu + 3 sigma]: max mu to min hi3."""
    if not summaries:
        raise DataError("at least one stage summary is required")
    lo = max(s.mu for s in summaries.values())
    hi = min(s.hi3 for s in summaries.values())
    if lo >= hi:
        raise NumericError(
            f"stage sigma ranges do not overlap: max mu {lo} >= min hi {hi}")
    return Interval(lo, hi)


def component_profile(matrices: Mapping[str, CorrelationMatrix],
                      grid: tuple[float, ...] = DEFAULT_GRID) -> ComponentProfile:
    """Largest-component counts for every stage at every grid threshold."""
    if not matrices:
        raise DataError("at least one stage matrix is required")
    counts = {
        stage: tuple(largest_component_count(m, theta) for theta in grid)
        for stage, m in matrices.items()
    }
    return ComponentProfile(tuple(grid), counts)


def select_coarse_interval(profile: ComponentProfile,
                           sigma_interval: Interval) -> Interval:
    """The grid cell with the steepest aggregate collapse, clipped to step 1.

    The winning cell maximizes the summed absolute drop of largest-component
    counts across stages between consecutive grid points; the lowest-index
    cell wins ties. The result is its intersection with ``sigma_interval``.
    """
    grid = profile.grid
    if grid[0] > sigma_interval.lo or grid[-1] < sigma_interval.hi:
        raise DataError(
            f"grid [{grid[0]}, {grid[-1]}] does not span the sigma interval "
            f"[{sigma_interval.lo}, {sigma_interval.hi}]")
    drops = []
    for k in range(len(grid) - 1):
        total = sum(abs(row[k + 1] - row[k]) for row in profile.counts.values())
        drops.append(total)
    best = int(np.argmax(drops))  # argmax takes the first maximum, lowest cell
    lo = max(grid[best], sigma_interval.lo)
    hi = min(grid[best + 1], sigma_interval.hi)
    if lo >= hi:
        raise NumericError(
            f"steepest-drop cell [{grid[best]}, {grid[best + 1]}] does not "
            f"intersect the sigma interval")
    return Interval(lo, hi)


def refine_threshold(matrices: Mapping[str, CorrelationMatrix],
                     interval: Interval,
                     d_final: float = DEFAULT_D_FINAL) -> ThresholdDecision:
    """Iteratively keep the most stable tenth of the interval.

    Each round splits the current interval into ten subintervals of width d
    (d starts at width / 10 and divides by ten per round). A subinterval's
    score is the summed absolute change, over stages, of the largest-component
    count between its endpoints; the minimum-score subinterval survives, with
    ties resolved toward the lower one. Rounds stop once d falls below
    ``d_final``; theta is the lower endpoint of the last survivor.
    """
    if not matrices:
        raise DataError("at least one stage matrix is required")
    if d_final <= 0:
        raise NumericError("d_final must be positive")
    stages = list(matrices)
    cache: dict[tuple[str, float], int] = {}

    def count(stage: str, theta: float) -> int:
        key = (stage, theta)
        if key not in cache:
            cache[key] = largest_component_count(matrices[stage], theta)
        return cache[key]

    lo, hi = interval.lo, interval.hi
    trace: list[RefinementStep] = []
    rounds: list[RefinementRound] = []
    d = (hi - lo) / 10.0
    # relative slack so repeated /10 drift cannot drop the final round
    # (e.g. 0.1/10/10/10 lands a few ulps under 1e-4)
    while d >= d_final * (1.0 - 1e-9):
        endpoints = tuple(lo + i * d for i in range(10)) + (hi,)
        per_stage = {s: tuple(count(s, e) for e in endpoints) for s in stages}
        scores = tuple(
            sum(abs(per_stage[s][i + 1] - per_stage[s][i]) for s in stages)
            for i in range(10))
        best = int(np.argmin(scores))  # first minimum: lower subinterval on ties
        rounds.append(RefinementRound(d, endpoints, per_stage, scores, best))
        chosen = Interval(endpoints[best], endpoints[best + 1])
        trace.append(RefinementStep(
            chosen, d,
            {s: (per_stage[s][best], per_stage[s][best + 1]) for s in stages},
            scores[best]))
        lo, hi = chosen.lo, chosen.hi
        d /= 10.0
    return ThresholdDecision(lo, Interval(lo, hi), tuple(trace), tuple(rounds))
