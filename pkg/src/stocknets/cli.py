"""Command-line entry point.

Each subcommand runs a slice of the pipeline against the configured inputs
and records what it wrote in the output directory's manifest. Exit codes:
0 success, 2 configuration error, 3 data validation error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import ConfigError, DataError, NumericError
from .pipeline import (RunConfig, config_from_json, demo_config, run_pipeline,
                       write_manifest, _jsonable)

_STEP_COMMANDS = ("ingest", "correlate", "threshold", "network", "metrics",
                  "sectors", "granger", "qap")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stocknets",
        description="Stage-sliced stock correlation and causality networks")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "ingest": "load prices, apply the universe filters, report exclusions",
        "correlate": "per-stage correlation matrices and moment summaries",
        "threshold": "run the three-step threshold selection",
        "network": "build and export the per-stage networks",
        "metrics": "topology, centralization, and degree distributions",
        "sectors": "per-sector topology report",
        "granger": "pairwise causality tests and the significance sweep",
        "qap": "permutation-calibrated fundamentals regressions",
        "report": "render degree distribution figures from emitted CSVs",
        "all": "full pipeline (plus causality and qap when enabled)",
    }
    for name in _STEP_COMMANDS + ("report", "all"):
        p = sub.add_parser(name, help=descriptions[name])
        p.add_argument("--config", help="RunConfig JSON file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--jobs", type=int, help="worker bound (overrides config)")
        p.add_argument("--seed", type=int, help="base seed (overrides config)")
        p.add_argument("--demo", action="store_true",
                       help="use the bundled synthetic dataset for any unset input")
    return parser


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = config_from_json(args.config) if args.config else RunConfig()
    if args.demo:
        bundled = demo_config(cfg.out_dir, cfg.seed)
        fills = {}
        for key in ("price_csv", "sector_csv", "fundamentals_csv"):
            if getattr(cfg, key) is None:
                fills[key] = getattr(bundled, key)
        if cfg.stages == "builtin":
            fills["stages"] = bundled.stages
        if fills:
            cfg = dataclasses.replace(cfg, **fills)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _run_report(cfg: RunConfig) -> int:
    from .report import render_plots  # matplotlib loads only when needed

    rendered = render_plots(cfg.out_dir)
    write_manifest(Path(cfg.out_dir), rendered, ("plots",),
                   _jsonable(dataclasses.asdict(cfg)), fresh=False)
    print(f"rendered {len(rendered)} figures in {cfg.out_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        if args.command == "report":
            return _run_report(cfg)
        steps = None if args.command == "all" else (args.command,)
        manifest = run_pipeline(cfg, steps)
        print(f"wrote {len(manifest.files)} manifest entries to {cfg.out_dir}")
        return 0
    except (ConfigError, DataError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
