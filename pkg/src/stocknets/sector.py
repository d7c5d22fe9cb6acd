"""Sector-level slices of a network under the 11-sector GICS partition."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping

import numpy as np

from .centrality import heterogeneity, relative_degree
from .errors import DataError
from .graph import Network, topology_summary

GICS_SECTORS: tuple[str, ...] = (
    "Energy",
    "Materials",
    "Industrials",
    "Consumer Discretionary",
    "Consumer Staples",
    "Health Care",
    "Financials",
    "Information Technology",
    "Telecommunication Services",
    "Utilities",
    "Real Estate",
)

_CANONICAL = {name.casefold(): name for name in GICS_SECTORS}

# a sector needs at least this many members for small-world statistics
MIN_SMALL_WORLD_MEMBERS = 3


def canonical_sector(name: str) -> str:
    key = " ".join(name.split()).casefold()
    if key not in _CANONICAL:
        raise DataError(
            f"unknown sector {name!r}; expected one of {list(GICS_SECTORS)}")
    return _CANONICAL[key]


@dataclass(frozen=True)
class SectorMap:
    assignments: Mapping[str, str]

    def __post_init__(self):
        fixed = {t: canonical_sector(s) for t, s in self.assignments.items()}
        object.__setattr__(self, "assignments", fixed)

    @classmethod
    def from_csv(cls, source: str | Path | IO[str]) -> "SectorMap":
        if hasattr(source, "read"):
            handle, close_after = source, False
        else:
            try:
                handle = open(source, "r", encoding="utf-8", newline="")
            except OSError as exc:
                raise DataError(f"cannot read sector CSV: {exc}") from exc
            close_after = True
        try:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or not {"ticker", "sector"} <= set(reader.fieldnames):
                raise DataError("sector CSV needs columns: ticker,sector")
            assignments: dict[str, str] = {}
            for line_no, row in enumerate(reader, start=2):
                ticker = (row.get("ticker") or "").strip()
                sector = (row.get("sector") or "").strip()
                if not ticker or not sector:
                    raise DataError(f"sector CSV line {line_no}: empty field")
                if ticker in assignments and assignments[ticker] != canonical_sector(sector):
                    raise DataError(f"sector CSV: conflicting sector for {ticker}")
                assignments[ticker] = canonical_sector(sector)
        finally:
            if close_after:
                handle.close()
        if not assignments:
            raise DataError("sector CSV contains no rows")
        return cls(assignments)

    def sector_of(self, ticker: str) -> str:
        try:
            return self.assignments[ticker]
        except KeyError:
            raise DataError(f"ticker {ticker} has no sector assignment") from None

    def members(self, sector: str, tickers: tuple[str, ...]) -> tuple[str, ...]:
        want = canonical_sector(sector)
        return tuple(t for t in tickers if self.assignments.get(t) == want)


@dataclass(frozen=True)
class SectorRow:
    sector: str
    n_nodes: int
    clustering: float | None
    avg_path_length: float | None
    mean_relative_degree: float
    mean_degree: float
    heterogeneity: float | None
    small_world_excluded: bool


@dataclass(frozen=True)
class SectorReport:
    rows: tuple[SectorRow, ...]


def sector_subgraph(net: Network, sectors: SectorMap, sector: str) -> Network:
    """Induced subgraph on the sector's members."""
    members = sectors.members(sector, net.tickers)
    if not members:
        raise DataError(f"sector {sector} has no members in this network")
    idx = [net.tickers.index(t) for t in members]
    return Network(members, net.adjacency[np.ix_(idx, idx)], net.directed)


def sector_report(net: Network, sectors: SectorMap) -> SectorReport:
    """Per-sector topology and centrality summary.

    Within-sector clustering and average path length come from the induced
    subgraph; the degree columns use full-network degrees (relative and raw
    means are both reported). Sectors below three members are flagged and
    carry no small-world columns.
    """
    if net.directed:
        raise DataError("sector report requires an undirected network")
    unmapped = [t for t in net.tickers if t not in sectors.assignments]
    if unmapped:
        raise DataError(f"tickers without sector assignment: {unmapped}")

    full_rel = relative_degree(net).values
    full_deg = net.degrees()
    rows = []
    for sector in GICS_SECTORS:
        members = sectors.members(sector, net.tickers)
        if not members:
            continue
        idx = [net.tickers.index(t) for t in members]
        degs = full_deg[idx]
        het = heterogeneity(degs) if degs.sum() > 0 else None
        if len(members) < MIN_SMALL_WORLD_MEMBERS:
            rows.append(SectorRow(
                sector, len(members), None, None,
                float(full_rel[idx].mean()), float(degs.mean()),
                het, True))
            continue
        summary = topology_summary(sector_subgraph(net, sectors, sector))
        rows.append(SectorRow(
            sector, len(members),
            summary.clustering, summary.avg_path_length,
            float(full_rel[idx].mean()), float(degs.mean()),
            het, False))
    return SectorReport(tuple(rows))
