"""Stage-sliced stock correlation networks, causality networks, and reports."""

from .causality import (NonlinearParams, PValueMatrix, causality_network,
                        causal_pvalue, density_sweep, directed_density,
                        granger_linear, granger_nonlinear, hj_statistic,
                        nonlinear_pvalue)
from .centrality import (CentralityVector, Centralization, DegreeDistribution,
                         PowerLawFit, centralizations, degree_distribution,
                         fit_power_law, heterogeneity, relative_betweenness,
                         relative_closeness, relative_degree)
from .correlation import (CorrelationMatrix, CorrSummary, corr_summary,
                          pearson_matrix, stage_matrices, stage_summaries)
from .errors import ConfigError, DataError, NumericError
from .graph import (Network, TopologySummary, build_network, components,
                    clustering_coefficients, largest_component_count,
                    shortest_paths, skeleton, topology_summary)
from .ingest import (DEFAULT_STAGES, Exclusion, ExclusionReport, FilterRules,
                     PricePanel, ReturnPanel, StageSpec, filter_universe,
                     load_prices, load_stage_config, log_returns, slice_stage,
                     stage_slices)
from .pipeline import (RunConfig, RunManifest, config_from_json, demo_config,
                       run_pipeline)
from .qap import (QapResult, RegressionSpec, load_fundamentals, qap_regress,
                  significance_stars, truncate_top)
from .sector import (GICS_SECTORS, SectorMap, SectorReport, sector_report,
                     sector_subgraph)
from .threshold import (Interval, ThresholdDecision, component_profile,
                        refine_threshold, select_coarse_interval,
                        shared_sigma_interval)

__version__ = "0.1.0"

__all__ = [
    "CentralityVector", "Centralization", "ConfigError", "CorrSummary",
    "CorrelationMatrix", "DEFAULT_STAGES", "DataError", "DegreeDistribution",
    "Exclusion", "ExclusionReport", "FilterRules", "GICS_SECTORS", "Interval",
    "Network", "NonlinearParams", "NumericError", "PValueMatrix", "PowerLawFit",
    "PricePanel", "QapResult", "RegressionSpec", "ReturnPanel", "RunConfig",
    "RunManifest", "SectorMap", "SectorReport", "StageSpec", "ThresholdDecision",
    "TopologySummary", "build_network", "causal_pvalue", "causality_network",
    "centralizations", "clustering_coefficients", "component_profile",
    "components", "config_from_json", "corr_summary", "degree_distribution",
    "demo_config", "density_sweep", "directed_density", "filter_universe",
    "fit_power_law", "granger_linear", "granger_nonlinear", "heterogeneity",
    "hj_statistic", "largest_component_count", "load_fundamentals",
    "load_prices", "load_stage_config", "log_returns", "nonlinear_pvalue",
    "pearson_matrix", "qap_regress", "refine_threshold", "relative_betweenness",
    "relative_closeness", "relative_degree", "run_pipeline", "sector_report",
    "sector_subgraph", "select_coarse_interval", "shared_sigma_interval",
    "shortest_paths", "significance_stars", "skeleton", "slice_stage",
    "stage_matrices", "stage_slices", "stage_summaries", "topology_summary",
    "truncate_top",
]
