"""Bundled synthetic demo dataset: 40 tickers over a two-stage weekly window.

The generator is deterministic, and the copies committed under
``stocknets/data`` were written by it; regenerating with the default seed
reproduces them byte for byte. The universe is built to exercise every
exclusion rule: two special-treatment prefixes, one ticker pinned at an
unchanged close for twelve weeks, and one with missing observations.
"""

from __future__ import annotations

import datetime as dt
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .ingest import StageSpec

DEMO_SEED = 20050603
# one week before the first stage start, so the stage's opening week has a return
DEMO_START = dt.date(2005, 5, 27)
DEMO_WEEKS = 180

DEMO_STAGES: tuple[StageSpec, ...] = (
    StageSpec("BULL 1", dt.date(2005, 6, 3), dt.date(2007, 10, 12), "bull"),
    StageSpec("BEAR 1", dt.date(2007, 10, 12), dt.date(2008, 10, 31), "bear"),
)

# one-factor weekly return model; the bear stage runs hotter so the two
# stages produce distinct correlation summaries
_FACTOR_VOL = {"BULL 1": 0.018, "BEAR 1": 0.022}
_IDIO_VOL = 0.018

_SECTOR_BLOCKS: tuple[tuple[str, int], ...] = (
    ("Energy", 4),
    ("Materials", 4),
    ("Industrials", 4),
    ("Consumer Discretionary", 4),
    ("Consumer Staples", 3),
    ("Health Care", 3),
    ("Financials", 3),
    ("Information Technology", 3),
    ("Utilities", 3),
    ("Real Estate", 3),
    # deliberately below the small-world minimum of three members
    ("Telecommunication Services", 2),
)

_FLAT_TICKER = "S039"
_FLAT_ROWS = slice(60, 72)
_GAP_TICKER = "S040"
_GAP_ROWS = (30, 95, 150)


def demo_tickers() -> tuple[str, ...]:
    clean = tuple(f"S{i:03d}" for i in range(1, 37))
    return clean + ("ST037", "*ST038", _FLAT_TICKER, _GAP_TICKER)


def _demo_dates() -> list[dt.date]:
    return [DEMO_START + dt.timedelta(weeks=k) for k in range(DEMO_WEEKS)]


def _stage_vol(date: dt.date) -> float:
    for stage in DEMO_STAGES:
        if stage.contains(date):
            return _FACTOR_VOL[stage.name]
    return _FACTOR_VOL[DEMO_STAGES[0].name]  # the pre-stage warmup week


def _demo_prices(rng: np.random.Generator) -> np.ndarray:
    tickers = demo_tickers()
    n = len(tickers)
    dates = _demo_dates()
    betas = rng.uniform(0.7, 1.3, size=n)
    log_p = np.empty((DEMO_WEEKS, n))
    log_p[0] = np.log(rng.uniform(20.0, 80.0, size=n))
    for t, date in enumerate(dates[1:], start=1):
        factor = rng.normal(0.0, _stage_vol(date))
        noise = rng.normal(0.0, _IDIO_VOL, size=n)
        log_p[t] = log_p[t - 1] + betas * factor + noise
    prices = np.exp(log_p)
    flat_col = tickers.index(_FLAT_TICKER)
    prices[_FLAT_ROWS, flat_col] = prices[_FLAT_ROWS.start, flat_col]
    return prices


def make_demo_dataset(out_dir: str | Path, seed: int = DEMO_SEED) -> dict[str, Path]:
    """Write prices.csv, sectors.csv, fundamentals.csv, stages.json.

    Returns the path of each file keyed by its role.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    tickers = demo_tickers()
    dates = _demo_dates()
    prices = _demo_prices(rng)
    gap_col = tickers.index(_GAP_TICKER)

    paths = {
        "prices": out / "prices.csv",
        "sectors": out / "sectors.csv",
        "fundamentals": out / "fundamentals.csv",
        "stages": out / "stages.json",
    }

    lines = ["date,ticker,close"]
    for t, date in enumerate(dates):
        for j, ticker in enumerate(tickers):
            if j == gap_col and t in _GAP_ROWS:
                continue  # absent row models a week with no observation
            lines.append(f"{date.isoformat()},{ticker},{prices[t, j]:.6f}")
    paths["prices"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    assignments = []
    for sector, count in _SECTOR_BLOCKS:
        assignments.extend([sector] * count)
    # the four to-be-excluded tickers still get sectors like everything else
    assignments.extend(["Financials", "Energy", "Materials", "Utilities"])
    lines = ["ticker,sector"]
    lines.extend(f"{t},{s}" for t, s in zip(tickers, assignments))
    paths["sectors"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["ticker,current_ratio,quick_ratio,leverage,turnover,roe,market_value,financing"]
    for ticker in tickers:
        current = rng.uniform(0.5, 3.0)
        quick = current * rng.uniform(0.6, 0.95)
        leverage = rng.uniform(0.2, 0.8)
        turnover = rng.uniform(0.5, 5.0)
        roe = rng.normal(0.08, 0.06)
        market_value = float(np.exp(rng.uniform(np.log(1e9), np.log(2e11))))
        financing = float(np.exp(rng.uniform(np.log(1e7), np.log(1e9))))
        lines.append(
            f"{ticker},{current:.4f},{quick:.4f},{leverage:.4f},"
            f"{turnover:.4f},{roe:.4f},{market_value:.2f},{financing:.2f}")
    paths["fundamentals"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    stage_items = [
        {"name": s.name, "start": s.start.isoformat(),
         "end": s.end.isoformat(), "phase": s.phase}
        for s in DEMO_STAGES
    ]
    paths["stages"].write_text(
        json.dumps(stage_items, indent=2) + "\n", encoding="utf-8")
    return paths


def demo_data_dir() -> Path:
    """Directory holding the committed copies of the demo files."""
    return Path(str(resources.files("stocknets") / "data"))
