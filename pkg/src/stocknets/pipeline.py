"""End-to-end orchestration: configuration, staged execution, artifacts.

Every artifact is a delimited text file or sorted-key JSON written with fixed
ordering and shortest-roundtrip float formatting, so a rerun with identical
inputs and seed reproduces every byte. The manifest records each artifact
with a content checksum.
"""

from __future__ import annotations

import csv
import hashlib
import json
from bisect import bisect_left, bisect_right
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import demo
from .causality import (DEFAULT_ALPHA_GRID, causality_network, directed_density,
                        granger_linear, granger_nonlinear)
from .centrality import (centralizations, degree_distribution, heterogeneity,
                         relative_degree)
from .correlation import stage_matrices, stage_summaries
from .errors import ConfigError, DataError, NumericError
from .graph import Network, build_network, skeleton, topology_summary
from .ingest import (FilterRules, Exclusion, ExclusionReport, PricePanel,
                     filter_universe, load_prices, load_stage_config,
                     log_returns, stage_slices)
from .qap import (FUNDAMENTAL_COLUMNS, QapResult, RegressionSpec,
                  load_fundamentals, qap_regress, significance_stars)
from .sector import SectorMap, sector_report
from .threshold import (DEFAULT_D_FINAL, DEFAULT_GRID, ThresholdDecision,
                        component_profile, refine_threshold,
                        select_coarse_interval, shared_sigma_interval)

CORE_STEPS: tuple[str, ...] = (
    "ingest", "correlate", "threshold", "network", "metrics", "sectors")
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class ThresholdSettings:
    grid: tuple[float, ...] = DEFAULT_GRID
    d_final: float = DEFAULT_D_FINAL
    theta: float | None = None  # a fixed value skips the search entirely

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if len(self.grid) < 2 or any(
                b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("threshold grid must be strictly increasing")
        if not all(0.0 <= g <= 1.0 for g in self.grid):
            raise ConfigError("threshold grid values must lie in [0, 1]")
        if self.d_final <= 0:
            raise ConfigError("d_final must be positive")
        if self.theta is not None and not 0.0 <= self.theta <= 1.0:
            raise ConfigError("fixed theta must lie in [0, 1]")


@dataclass(frozen=True)
class CausalitySettings:
    enabled: bool = False
    lag: int = 1
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    alpha: float = 0.05  # level used for the per-stage network itself
    nonlinear: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid",
                           tuple(float(a) for a in self.alpha_grid))
        if self.lag < 1:
            raise ConfigError("causality lag must be >= 1")
        if not self.alpha_grid or not all(
                0.0 < a <= 1.0 for a in self.alpha_grid):
            raise ConfigError("alpha grid values must lie in (0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class QapSettings:
    enabled: bool = False
    fractions: tuple[float, ...] = (1.0, 0.75, 0.5)
    permutations: int = 1000
    financing_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "fractions",
                           tuple(float(f) for f in self.fractions))
        if not self.fractions or not all(
                0.0 < f <= 1.0 for f in self.fractions):
            raise ConfigError("qap fractions must lie in (0, 1]")
        if self.permutations < 1:
            raise ConfigError("qap permutations must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    price_csv: str | None = None
    sector_csv: str | None = None
    fundamentals_csv: str | None = None
    stages: str = "builtin"
    filters: FilterRules = field(default_factory=FilterRules)
    threshold: ThresholdSettings = field(default_factory=ThresholdSettings)
    causality: CausalitySettings = field(default_factory=CausalitySettings)
    qap: QapSettings = field(default_factory=QapSettings)
    out_dir: str = "out"
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


_SECTION_TYPES = {
    "filters": FilterRules,
    "threshold": ThresholdSettings,
    "causality": CausalitySettings,
    "qap": QapSettings,
}
_SCALAR_KEYS = {"price_csv", "sector_csv", "fundamentals_csv", "stages",
                "out_dir", "seed", "jobs"}


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from nested JSON data, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _SCALAR_KEYS - set(_SECTION_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {k: data[k] for k in _SCALAR_KEYS if k in data}
    for section, cls in _SECTION_TYPES.items():
        if section not in data:
            continue
        body = data[section]
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section} must be an object")
        allowed = set(cls.__dataclass_fields__)
        extra = set(body) - allowed
        if extra:
            raise ConfigError(
                f"unknown keys in config section {section}: {sorted(extra)}")
        try:
            kwargs[section] = cls(**body)
        except TypeError as exc:
            raise ConfigError(f"config section {section}: {exc}") from exc
    return RunConfig(**kwargs)


def config_from_json(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        return config_from_dict(json.loads(p.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc


def demo_config(out_dir: str | Path, seed: int = 0) -> RunConfig:
    """RunConfig pointing every input at the bundled demo dataset."""
    data = demo.demo_data_dir()
    return RunConfig(
        price_csv=str(data / "prices.csv"),
        sector_csv=str(data / "sectors.csv"),
        fundamentals_csv=str(data / "fundamentals.csv"),
        stages=str(data / "stages.json"),
        out_dir=str(out_dir),
        seed=seed,
    )


@dataclass(frozen=True)
class RunManifest:
    files: dict[str, str]  # relative path -> sha256 of content
    notes: tuple[str, ...]
    settings: dict


@contextmanager
def _stage_errors(name: str):
    try:
        yield
    except (ConfigError, DataError, NumericError) as exc:
        if str(exc).startswith("stage "):
            raise  # already attributed by an inner wrapper
        raise type(exc)(f"stage {name}: {exc}") from exc


def _slug(stage_name: str) -> str:
    parts = "".join(c if c.isalnum() else " " for c in stage_name).split()
    return "_".join(p.lower() for p in parts)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


class _Run:
    """Lazy computation chain shared by every subcommand."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    @cached_property
    def stage_list(self):
        with _stage_errors("ingest"):
            return load_stage_config(self.cfg.stages)

    @cached_property
    def _ingested(self) -> tuple[PricePanel, ExclusionReport]:
        cfg = self.cfg
        with _stage_errors("ingest"):
            if not cfg.price_csv:
                raise ConfigError("price_csv is required")
            panel = load_prices(cfg.price_csv)
            panel = _trim_panel(panel, self.stage_list)
            kept, report = filter_universe(panel, cfg.filters, self.stage_list)
            kept, report = _drop_incomplete(kept, report)
            return kept, report

    @property
    def panel(self) -> PricePanel:
        return self._ingested[0]

    @property
    def exclusions(self) -> ExclusionReport:
        return self._ingested[1]

    @cached_property
    def slices(self):
        with _stage_errors("ingest"):
            return stage_slices(log_returns(self.panel), self.stage_list)

    @cached_property
    def matrices(self):
        with _stage_errors("correlate"):
            return stage_matrices(self.slices)

    @cached_property
    def summaries(self):
        with _stage_errors("correlate"):
            return stage_summaries(self.matrices)

    @cached_property
    def decision(self) -> ThresholdDecision | None:
        ts = self.cfg.threshold
        if ts.theta is not None:
            return None
        with _stage_errors("threshold"):
            interval = shared_sigma_interval(self.summaries)
            profile = component_profile(self.matrices, ts.grid)
            coarse = select_coarse_interval(profile, interval)
            return refine_threshold(self.matrices, coarse, ts.d_final)

    @cached_property
    def theta(self) -> float:
        ts = self.cfg.threshold
        if ts.theta is not None:
            return float(ts.theta)
        return self.decision.theta0

    @cached_property
    def networks(self) -> dict[str, Network]:
        with _stage_errors("network"):
            return {name: build_network(m, self.theta)
                    for name, m in self.matrices.items()}

    @cached_property
    def sector_map(self) -> SectorMap:
        with _stage_errors("sectors"):
            if not self.cfg.sector_csv:
                raise ConfigError("sector_csv is required for sector reports")
            return SectorMap.from_csv(self.cfg.sector_csv)

    @cached_property
    def fundamentals(self):
        cfg = self.cfg
        with _stage_errors("qap"):
            if not cfg.fundamentals_csv:
                raise ConfigError("fundamentals_csv is required for qap")
            extra = ((cfg.qap.financing_column,)
                     if cfg.qap.financing_column else ())
            return load_fundamentals(cfg.fundamentals_csv, extra=extra)


def _trim_panel(panel: PricePanel, stages) -> PricePanel:
    """Clip to the analysis window plus one week of return warmup."""
    lo_date = min(s.start for s in stages)
    hi_date = max(s.end for s in stages)
    lo = bisect_left(panel.dates, lo_date)
    if lo > 0:
        lo -= 1  # the week before the first stage seeds its first return
    hi = bisect_right(panel.dates, hi_date)
    if hi - lo < 2:
        raise DataError("panel does not cover the stage window")
    return PricePanel(panel.dates[lo:hi], panel.tickers,
                      panel.prices[lo:hi], panel.parse_errors)


def _drop_incomplete(panel: PricePanel,
                     report: ExclusionReport) -> tuple[PricePanel, ExclusionReport]:
    """Remove tickers with gaps outside the stage windows (warmup week)."""
    gaps = np.isnan(panel.prices).any(axis=0)
    if not gaps.any():
        return panel, report
    dropped = [t for t, g in zip(panel.tickers, gaps) if g]
    kept = [t for t, g in zip(panel.tickers, gaps) if not g]
    if not kept:
        raise DataError("all tickers excluded; empty universe")
    more = [Exclusion(t, "missing", "missing cells in the analysis window")
            for t in dropped]
    return panel.select(kept), report.extended(more)


class _Emitter:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def csv_file(self, name: str, header: list[str], rows) -> None:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self.written.append(path)

    def json_file(self, name: str, payload: dict) -> None:
        path = self.out_dir / name
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8")
        self.written.append(path)


def _emit_ingest(run: _Run, em: _Emitter) -> None:
    em.csv_file(
        "exclusions.csv", ["ticker", "rule", "detail"],
        [(e.ticker, e.rule, e.detail) for e in run.exclusions.entries])


def _emit_correlate(run: _Run, em: _Emitter) -> None:
    rows = []
    for name in run.slices:
        s = run.summaries[name]
        rows.append((name, run.slices[name].n_obs, len(run.slices[name].tickers),
                     s.mu, s.sigma, s.lo3, s.hi3))
    em.csv_file(
        "correlation_summary.csv",
        ["stage", "n_obs", "n_tickers", "mu", "sigma",
         "mu_minus_3sigma", "mu_plus_3sigma"],
        rows)


def _emit_threshold(run: _Run, em: _Emitter) -> None:
    ts = run.cfg.threshold
    with _stage_errors("threshold"):
        profile = component_profile(run.matrices, ts.grid)
    em.csv_file(
        "component_profile.csv",
        ["stage"] + [_fmt(g) for g in profile.grid],
        [(stage,) + counts for stage, counts in profile.counts.items()])

    decision = run.decision
    trace_rows = []
    if decision is not None:
        for i, step in enumerate(decision.trace, start=1):
            trace_rows.append((i, step.step, step.interval.lo,
                               step.interval.hi, step.score))
    em.csv_file(
        "refinement_trace.csv",
        ["round", "step", "lo", "hi", "score"], trace_rows)

    if decision is None:
        payload = {"mode": "fixed", "theta0": run.theta}
    else:
        with _stage_errors("threshold"):
            sigma_iv = shared_sigma_interval(run.summaries)
            coarse_iv = select_coarse_interval(profile, sigma_iv)
        payload = {
            "mode": "search",
            "theta0": decision.theta0,
            "d_final": ts.d_final,
            "sigma_interval": {"lo": sigma_iv.lo, "hi": sigma_iv.hi},
            "coarse_interval": {"lo": coarse_iv.lo, "hi": coarse_iv.hi},
            "rounds": [
                {"step": r.step, "endpoints": list(r.endpoints),
                 "scores": list(r.scores), "selected": r.selected,
                 "counts": {s: list(c) for s, c in r.counts.items()}}
                for r in decision.rounds],
            "trace": [
                {"lo": s.interval.lo, "hi": s.interval.hi, "step": s.step,
                 "score": s.score,
                 "counts": {k: list(v) for k, v in s.counts.items()}}
                for s in decision.trace],
        }
    em.json_file("threshold_decision.json", payload)


def _emit_network(run: _Run, em: _Emitter) -> None:
    for name, net in run.networks.items():
        em.csv_file(f"edges_{_slug(name)}.csv", ["source", "target"],
                    net.edge_list())


def _emit_metrics(run: _Run, em: _Emitter) -> None:
    topo_rows = []
    central_rows = []
    with _stage_errors("metrics"):
        for name, net in run.networks.items():
            ts = topology_summary(net)
            topo_rows.append((name, ts.n_nodes, ts.n_edges, ts.density,
                              ts.clustering, ts.avg_path_length, ts.diameter,
                              ts.n_components, ts.largest_component))
            cz = centralizations(net)
            het = heterogeneity(net.degrees()) if net.degrees().sum() else None
            central_rows.append((name, cz.degree, cz.betweenness,
                                 cz.closeness, het))
        dists = {name: degree_distribution(net)
                 for name, net in run.networks.items()}
    em.csv_file(
        "topology_summary.csv",
        ["stage", "n_nodes", "n_edges", "density", "clustering",
         "avg_path_length", "diameter", "n_components", "largest_component"],
        topo_rows)
    em.csv_file(
        "centralizations.csv",
        ["stage", "degree", "betweenness", "closeness", "heterogeneity"],
        central_rows)
    for name, dist in dists.items():
        em.csv_file(f"degree_cdf_{_slug(name)}.csv",
                    ["k", "cum_prob"], dist.cdf_points)
        em.csv_file(f"degree_loglog_{_slug(name)}.csv",
                    ["ln_k", "ln_prob"], dist.loglog_points)


def _emit_sectors(run: _Run, em: _Emitter) -> None:
    rows = []
    with _stage_errors("sectors"):
        for name, net in run.networks.items():
            for r in sector_report(net, run.sector_map).rows:
                rows.append((name, r.sector, r.n_nodes, r.mean_relative_degree,
                             r.mean_degree, r.clustering, r.avg_path_length,
                             r.heterogeneity, r.small_world_excluded))
    em.csv_file(
        "sector_report.csv",
        ["stage", "sector", "n_nodes", "mean_relative_degree", "mean_degree",
         "clustering", "avg_path_length", "heterogeneity",
         "small_world_excluded"],
        rows)


def _emit_granger(run: _Run, em: _Emitter) -> None:
    cs = run.cfg.causality
    sweep_rows = []
    with _stage_errors("granger"):
        for name, panel in run.slices.items():
            pvals = granger_linear(panel, cs.lag, jobs=run.cfg.jobs)
            em.csv_file(
                f"granger_pvalues_{_slug(name)}.csv",
                ["target"] + list(pvals.tickers),
                [(t,) + tuple(pvals.p[i]) for i, t in enumerate(pvals.tickers)])
            if cs.nonlinear:
                hj = granger_nonlinear(panel, jobs=run.cfg.jobs)
                em.csv_file(
                    f"hj_pvalues_{_slug(name)}.csv",
                    ["target"] + list(hj.tickers),
                    [(t,) + tuple(hj.p[i]) for i, t in enumerate(hj.tickers)])
            for alpha in cs.alpha_grid:
                net = causality_network(pvals, alpha)
                und = skeleton(net)
                cz = centralizations(und)
                sweep_rows.append((name, alpha, int(net.adjacency.sum()),
                                   directed_density(net), cz.degree,
                                   cz.betweenness, cz.closeness))
    em.csv_file(
        "causality_sweep.csv",
        ["stage", "alpha", "n_edges", "density", "degree_centralization",
         "betweenness_centralization", "closeness_centralization"],
        sweep_rows)


def _qap_seed(base: int, stage_idx: int, frac_idx: int) -> int:
    state = np.random.SeedSequence([base, stage_idx, frac_idx]).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def _emit_qap(run: _Run, em: _Emitter) -> None:
    qs = run.cfg.qap
    regressor_names = list(FUNDAMENTAL_COLUMNS)
    if qs.financing_column:
        regressor_names.append(qs.financing_column)
    results: list[tuple[str, float, QapResult]] = []
    with _stage_errors("qap"):
        series = run.fundamentals
        for si, (name, net) in enumerate(run.networks.items()):
            dep = relative_degree(net).as_dict()
            missing = [t for t in net.tickers
                       if t not in series[regressor_names[0]]]
            if missing:
                raise DataError(f"fundamentals missing tickers: {missing}")
            regs = {rn: {t: series[rn][t] for t in net.tickers}
                    for rn in regressor_names}
            for fi, frac in enumerate(qs.fractions):
                spec = RegressionSpec(
                    dependent=dep, regressors=regs, top_fraction=frac,
                    permutations=qs.permutations,
                    seed=_qap_seed(run.cfg.seed, si, fi))
                results.append((name, frac, qap_regress(spec)))

    header = ["stage", "top_fraction", "n_used", "r_squared", "intercept"]
    for rn in regressor_names:
        header.extend([rn, f"{rn}_p"])
    rows = []
    for name, frac, res in results:
        row = [name, frac, res.n_used, res.r_squared,
               _fmt(res.coefficients["intercept"])]
        for rn in regressor_names:
            p = res.permutation_p[rn]
            row.append(f"{_fmt(res.coefficients[rn])}{significance_stars(p)}")
            row.append(p)
        rows.append(tuple(row))
    em.csv_file("qap_results.csv", header, rows)
    em.json_file("qap_results.json", {
        "results": [
            {"stage": name, "top_fraction": frac,
             "coefficients": dict(res.coefficients),
             "permutation_p": dict(res.permutation_p),
             "r_squared": res.r_squared, "n_used": res.n_used,
             "permutations_run": res.permutations_run,
             "seed": res.seed, "permuted": res.permuted}
            for name, frac, res in results]})


_EMITTERS = {
    "ingest": _emit_ingest,
    "correlate": _emit_correlate,
    "threshold": _emit_threshold,
    "network": _emit_network,
    "metrics": _emit_metrics,
    "sectors": _emit_sectors,
    "granger": _emit_granger,
    "qap": _emit_qap,
}


def _checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, new_files: list[Path], notes: tuple[str, ...],
                   settings: dict, fresh: bool) -> RunManifest:
    """Record checksums; a fresh write discards earlier entries, a merge keeps them."""
    manifest_path = out_dir / MANIFEST_NAME
    files: dict[str, str] = {}
    old_notes: list[str] = []
    if not fresh and manifest_path.is_file():
        try:
            payload = json.loads(manifest_path.read_text(encoding="utf-8"))
            files = dict(payload["files"])
            old_notes = [str(n) for n in payload.get("notes", [])]
        except (json.JSONDecodeError, KeyError, TypeError):
            files = {}
    for path in new_files:
        files[path.relative_to(out_dir).as_posix()] = _checksum(path)
    notes = tuple(dict.fromkeys([*old_notes, *notes]))
    manifest = RunManifest(dict(sorted(files.items())), notes, settings)
    manifest_path.write_text(json.dumps(
        {"files": manifest.files, "notes": list(notes), "settings": settings},
        indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def run_pipeline(cfg: RunConfig, steps: tuple[str, ...] | None = None) -> RunManifest:
    """Execute the requested steps (default: the full core chain) and emit files.

    With ``steps=None`` the core chain runs, plus causality and qap when
    enabled, and the manifest is rewritten from scratch; an explicit step
    tuple merges into any existing manifest instead.
    """
    fresh = steps is None
    if steps is None:
        wanted = list(CORE_STEPS)
        if cfg.causality.enabled:
            wanted.append("granger")
        if cfg.qap.enabled:
            wanted.append("qap")
    else:
        unknown = [s for s in steps if s not in _EMITTERS]
        if unknown:
            raise ConfigError(f"unknown pipeline steps: {unknown}")
        wanted = list(steps)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg)
    em = _Emitter(out_dir)
    for step in _EMITTERS:
        if step in wanted:
            _EMITTERS[step](run, em)

    notes = ["theta:fixed" if cfg.threshold.theta is not None else "theta:search"]
    if cfg.causality.nonlinear and "granger" in wanted:
        notes.append("nonlinear:on")
    settings = _jsonable(asdict(cfg))
    return write_manifest(out_dir, em.written, tuple(notes), settings, fresh)
