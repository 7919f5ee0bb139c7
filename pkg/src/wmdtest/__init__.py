"""Weighted mean-difference tests for partially paired two-group data."""

from .baselines import (
    BaselineMethod,
    impute_median,
    paired_t,
    run_baseline,
    wilcoxon_signed_rank,
)
from .core import (
    MomentParams,
    analytic_power,
    asymptotic_variance,
    normal_cdf,
    normal_quantile,
    normal_sf,
    two_sided_p,
    weighted_mean_difference,
)
from .inference import TestResult, bootstrap_se, resolve_weights, run_test
from .sample import (
    MissingPattern,
    PartiallyPairedSample,
    SummaryStats,
    summarize,
    validate,
)
from .simulate import (
    MissingnessSpec,
    PopulationParams,
    ScenarioSpec,
    SimulationReport,
    calibrate_latent_rho,
    generate,
    load_scenarios,
    run_scenario,
)
from .weights import (
    OptimalWeightSolution,
    WeightPair,
    WeightStrategy,
    bhoj_weights,
    boundary_candidates,
    clamp_unit,
    complete_only_weights,
    interior_root,
    optimal_weights,
    simple_weights,
)

__all__ = [
    "BaselineMethod",
    "MissingPattern",
    "MissingnessSpec",
    "MomentParams",
    "OptimalWeightSolution",
    "PartiallyPairedSample",
    "PopulationParams",
    "ScenarioSpec",
    "SimulationReport",
    "SummaryStats",
    "TestResult",
    "WeightPair",
    "WeightStrategy",
    "analytic_power",
    "asymptotic_variance",
    "bhoj_weights",
    "bootstrap_se",
    "boundary_candidates",
    "calibrate_latent_rho",
    "clamp_unit",
    "complete_only_weights",
    "generate",
    "impute_median",
    "interior_root",
    "load_scenarios",
    "normal_cdf",
    "normal_quantile",
    "normal_sf",
    "optimal_weights",
    "paired_t",
    "resolve_weights",
    "run_baseline",
    "run_scenario",
    "run_test",
    "simple_weights",
    "summarize",
    "two_sided_p",
    "validate",
    "weighted_mean_difference",
    "wilcoxon_signed_rank",
]

__version__ = "0.1.0"
