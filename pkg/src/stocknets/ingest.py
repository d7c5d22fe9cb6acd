"""Price panel ingestion, universe filtering, and stage slicing.

Input is a long-format CSV of weekly closes (``date,ticker,close``). The panel
is pivoted to a dates x tickers matrix with NaN for missing cells; missing
cells are tolerated at load time and fatal once returns are computed.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_SCHEMA = {"date": "date", "ticker": "ticker", "close": "close"}


@dataclass(frozen=True)
class PriceRecord:
    date: dt.date
    ticker: str
    close: float


@dataclass(frozen=True)
class RowError:
    line: int
    reason: str


@dataclass(frozen=True)
class PricePanel:
    """Aligned close-price matrix; ``prices[t, i]`` is ticker i on date t."""

    dates: tuple[dt.date, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray
    parse_errors: tuple[RowError, ...] = ()

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("panel dates must be strictly increasing")
        present = ~np.isnan(prices)
        if np.any(prices[present] <= 0):
            raise DataError("panel contains non-positive prices")
        prices = prices.copy()
        prices.flags.writeable = False
        object.__setattr__(self, "prices", prices)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_tickers(self) -> int:
        return len(self.tickers)

    def column(self, ticker: str) -> np.ndarray:
        return self.prices[:, self.tickers.index(ticker)]

    def select(self, tickers: Iterable[str]) -> "PricePanel":
        keep = list(tickers)
        idx = [self.tickers.index(t) for t in keep]
        return PricePanel(self.dates, tuple(keep), self.prices[:, idx])


@dataclass(frozen=True)
class ReturnPanel:
    """Weekly log returns; row t is ln(P_t / P_{t-1}) dated at t."""

    dates: tuple[dt.date, ...]
    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        rets = np.asarray(self.returns, dtype=float)
        if rets.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"return matrix shape {rets.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(rets)):
            raise DataError("return panel must be finite everywhere")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("return dates must be strictly increasing")
        rets = rets.copy()
        rets.flags.writeable = False
        object.__setattr__(self, "returns", rets)

    @property
    def n_obs(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class StageSpec:
    """A named market stage: closed date window [start, end] plus a phase tag."""

    name: str
    start: dt.date
    end: dt.date
    phase: str

    def __post_init__(self):
        if not self.name:
            raise ConfigError("stage name must be non-empty")
        if self.start >= self.end:
            raise ConfigError(f"stage {self.name}: start must precede end")
        if self.phase not in ("bull", "bear"):
            raise ConfigError(f"stage {self.name}: phase must be 'bull' or 'bear'")

    def contains(self, date: dt.date) -> bool:
        return self.start <= date <= self.end


# Built-in six-stage segmentation of the 2005-2016 Shanghai A-share cycle.
# Consecutive stages deliberately share their boundary week.
DEFAULT_STAGES: tuple[StageSpec, ...] = (
    StageSpec("BULL 1", dt.date(2005, 6, 3), dt.date(2007, 10, 12), "bull"),
    StageSpec("BEAR 1", dt.date(2007, 10, 12), dt.date(2008, 10, 31), "bear"),
    StageSpec("BULL 2", dt.date(2008, 10, 31), dt.date(2009, 7, 31), "bull"),
    StageSpec("BEAR 2", dt.date(2009, 7, 31), dt.date(2014, 3, 14), "bear"),
    StageSpec("BULL 3", dt.date(2014, 3, 14), dt.date(2015, 6, 12), "bull"),
    StageSpec("BEAR 3", dt.date(2015, 6, 12), dt.date(2016, 1, 29), "bear"),
)


@dataclass(frozen=True)
class FilterRules:
    """Universe filter configuration; field names double as config keys."""

    drop_missing: bool = True
    drop_st_prefixes: tuple[str, ...] = ("ST", "*ST")
    max_consecutive_zero_returns: int = 10

    def __post_init__(self):
        if self.max_consecutive_zero_returns < 2:
            raise ConfigError("max_consecutive_zero_returns must be at least 2")
        object.__setattr__(self, "drop_st_prefixes", tuple(self.drop_st_prefixes))


@dataclass(frozen=True)
class Exclusion:
    ticker: str
    rule: str
    detail: str


@dataclass(frozen=True)
class ExclusionReport:
    entries: tuple[Exclusion, ...] = ()

    def tickers(self) -> tuple[str, ...]:
        return tuple(e.ticker for e in self.entries)

    def extended(self, more: Iterable[Exclusion]) -> "ExclusionReport":
        return ExclusionReport(self.entries + tuple(more))


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def load_prices(source: str | Path | IO[str],
                schema: Mapping[str, str] | None = None) -> PricePanel:
    """Read a long-format close-price CSV into an aligned panel.

    ``schema`` maps the logical column names (date, ticker, close) to the
    actual header names. Rows that fail to parse are collected on the panel's
    ``parse_errors`` rather than silently dropped; structural problems
    (missing columns, conflicting duplicates, non-positive prices, no usable
    rows at all) raise.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        mapping.update(schema)

    if hasattr(source, "read"):
        handle = source
        close_after = False
    else:
        try:
            handle = open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot read price CSV: {exc}") from exc
        close_after = True
    try:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError("price CSV is empty")
        missing_cols = [c for c in mapping.values() if c not in reader.fieldnames]
        if missing_cols:
            raise DataError(f"price CSV missing columns: {missing_cols}")

        cells: dict[tuple[dt.date, str], float] = {}
        errors: list[RowError] = []
        for line_no, row in enumerate(reader, start=2):
            raw_date = row.get(mapping["date"]) or ""
            raw_ticker = (row.get(mapping["ticker"]) or "").strip()
            raw_close = row.get(mapping["close"]) or ""
            try:
                date = _parse_date(raw_date)
            except ValueError:
                errors.append(RowError(line_no, f"bad date {raw_date!r}"))
                continue
            if not raw_ticker:
                errors.append(RowError(line_no, "empty ticker"))
                continue
            try:
                close = float(raw_close)
            except ValueError:
                errors.append(RowError(line_no, f"bad close {raw_close!r}"))
                continue
            if not math.isfinite(close):
                errors.append(RowError(line_no, f"non-finite close {raw_close!r}"))
                continue
            if close <= 0:
                raise DataError(
                    f"non-positive close for {raw_ticker} on {date} (line {line_no})")
            key = (date, raw_ticker)
            if key in cells:
                if cells[key] != close:
                    raise DataError(
                        f"conflicting duplicate for {raw_ticker} on {date}: "
                        f"{cells[key]} vs {close}")
                continue
            cells[key] = close
    finally:
        if close_after:
            handle.close()

    if not cells:
        raise DataError("price CSV contains no usable rows")

    dates = tuple(sorted({d for d, _ in cells}))
    tickers = tuple(sorted({t for _, t in cells}))
    prices = np.full((len(dates), len(tickers)), np.nan)
    date_idx = {d: i for i, d in enumerate(dates)}
    tick_idx = {t: j for j, t in enumerate(tickers)}
    for (date, ticker), close in cells.items():
        prices[date_idx[date], tick_idx[ticker]] = close
    return PricePanel(dates, tickers, prices, tuple(errors))


def panel_from_records(records: Iterable[PriceRecord]) -> PricePanel:
    """Build a panel from already-parsed records; duplicates must agree."""
    cells: dict[tuple[dt.date, str], float] = {}
    for rec in records:
        key = (rec.date, rec.ticker)
        if key in cells and cells[key] != rec.close:
            raise DataError(
                f"conflicting duplicate for {rec.ticker} on {rec.date}")
        cells[key] = rec.close
    if not cells:
        raise DataError("no price records")
    dates = tuple(sorted({d for d, _ in cells}))
    tickers = tuple(sorted({t for _, t in cells}))
    prices = np.full((len(dates), len(tickers)), np.nan)
    date_idx = {d: i for i, d in enumerate(dates)}
    tick_idx = {t: j for j, t in enumerate(tickers)}
    for (date, ticker), close in cells.items():
        prices[date_idx[date], tick_idx[ticker]] = close
    return PricePanel(dates, tickers, prices)


def log_returns(panel: PricePanel) -> ReturnPanel:
    """Weekly log returns ln(P_t) - ln(P_{t-1}); requires a complete panel."""
    if panel.n_dates < 2:
        raise DataError("need at least two dates to compute returns")
    missing = np.isnan(panel.prices).any(axis=0)
    if missing.any():
        bad = [t for t, m in zip(panel.tickers, missing) if m]
        raise DataError(f"missing cells for tickers: {bad}")
    rets = np.diff(np.log(panel.prices), axis=0)
    return ReturnPanel(panel.dates[1:], panel.tickers, rets)


def _window_slice(dates: tuple[dt.date, ...], stage: StageSpec) -> slice:
    lo = 0
    while lo < len(dates) and dates[lo] < stage.start:
        lo += 1
    hi = lo
    while hi < len(dates) and dates[hi] <= stage.end:
        hi += 1
    return slice(lo, hi)


def _max_flat_run(closes: np.ndarray) -> int:
    """Longest run of consecutive equal closes (weeks at an unchanged price)."""
    best = run = 1
    for a, b in zip(closes, closes[1:]):
        run = run + 1 if b == a else 1
        best = max(best, run)
    return best


def validate_stages(stages: Iterable[StageSpec]) -> tuple[StageSpec, ...]:
    """Check ordering; consecutive stages may share exactly their boundary date."""
    out = tuple(stages)
    if not out:
        raise ConfigError("at least one stage is required")
    for a, b in zip(out, out[1:]):
        if b.start < a.end:
            raise ConfigError(f"stages {a.name} and {b.name} overlap")
        if b.start < a.start:
            raise ConfigError("stages must be ordered by start date")
    return out


def filter_universe(panel: PricePanel, rules: FilterRules,
                    stages: Iterable[StageSpec]) -> tuple[PricePanel, ExclusionReport]:
    """Apply the exclusion rules and return the surviving panel plus a report.

    Rules fire in a fixed order per ticker (prefix, then missing cells, then
    flat-price runs) and only the first hit is reported. Missing cells and
    flat runs are judged inside each stage window only.
    """
    stage_list = validate_stages(stages)
    windows = []
    for stage in stage_list:
        sl = _window_slice(panel.dates, stage)
        if sl.stop - sl.start < 2:
            raise DataError(f"stage {stage.name} covers fewer than two panel dates")
        windows.append((stage, sl))

    exclusions: list[Exclusion] = []
    kept: list[str] = []
    for j, ticker in enumerate(panel.tickers):
        prefix = next((p for p in rules.drop_st_prefixes if ticker.startswith(p)), None)
        if prefix is not None:
            exclusions.append(Exclusion(ticker, "st_prefix", f"prefix {prefix}"))
            continue
        col = panel.prices[:, j]
        if rules.drop_missing:
            gap = next((s.name for s, sl in windows if np.isnan(col[sl]).any()), None)
            if gap is not None:
                exclusions.append(Exclusion(ticker, "missing", f"missing cells in {gap}"))
                continue
        flat = None
        for stage, sl in windows:
            if np.isnan(col[sl]).any():
                continue  # without drop_missing the run rule skips gapped windows
            run = _max_flat_run(col[sl])
            if run >= rules.max_consecutive_zero_returns:
                flat = (stage.name, run)
                break
        if flat is not None:
            exclusions.append(Exclusion(
                ticker, "zero_returns",
                f"{flat[1]} weeks at an unchanged close in {flat[0]}"))
            continue
        kept.append(ticker)

    if not kept:
        raise DataError("all tickers excluded; empty universe")
    return panel.select(kept), ExclusionReport(tuple(exclusions))


def slice_stage(returns: ReturnPanel, stage: StageSpec) -> ReturnPanel:
    """Rows of the return panel dated inside [start, end]; both ends inclusive,
    so a shared boundary week lands in both adjacent stages."""
    sl = _window_slice(returns.dates, stage)
    if sl.stop - sl.start == 0:
        raise DataError(f"stage {stage.name} has no return rows")
    return ReturnPanel(returns.dates[sl], returns.tickers, returns.returns[sl])


def stage_slices(returns: ReturnPanel,
                 stages: Iterable[StageSpec]) -> dict[str, ReturnPanel]:
    return {s.name: slice_stage(returns, s) for s in validate_stages(stages)}


def load_stage_config(source: str | Path | None) -> tuple[StageSpec, ...]:
    """Stage list from a JSON file, or the built-in six stages for None/'builtin'."""
    if source is None or source == "builtin":
        return DEFAULT_STAGES
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"stage config not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"stage config is not valid JSON: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise ConfigError("stage config must be a non-empty JSON array")
    stages = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"stage entry {i} must be an object")
        extra = set(item) - {"name", "start", "end", "phase"}
        if extra:
            raise ConfigError(f"stage entry {i} has unknown keys: {sorted(extra)}")
        try:
            stages.append(StageSpec(
                str(item["name"]), _parse_date(str(item["start"])),
                _parse_date(str(item["end"])), str(item["phase"])))
        except KeyError as exc:
            raise ConfigError(f"stage entry {i} missing key {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"stage entry {i}: {exc}") from exc
    return validate_stages(stages)
