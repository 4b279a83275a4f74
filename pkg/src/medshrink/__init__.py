"""Natural direct and indirect effects in randomized trials, estimated by
OLS, two-stage least squares with treatment-by-covariate interaction
instruments, and a Stein-like shrinkage combination of the two."""

from .bootstrap import BootstrapConfig, BootstrapSummary, bootstrap_se
from .diagnostics import FTestResult, f_upper_tail, first_stage_f
from .effects import TotalEffectFit, natural_effects, total_effect_fit
from .estimators import (
    HAUSMAN,
    BootstrapCse,
    FitResult,
    SelectionProjection,
    SpslResult,
    closed_form_alpha,
    estimate_alpha,
    first_stage_project,
    ols_fit,
    spsl_fit,
    tsls_fit,
)
from .exceptions import (
    ConfigError,
    DataError,
    DegenerateCombinationError,
    IdentifiabilityError,
    InfeasibleScenarioError,
    MedshrinkError,
    WeakInstrumentWarning,
)
from .io import LoadResult, ReportTable, RunConfig, load_csv, run_diagnose, run_fit
from .model import (
    CausalEffects,
    CoefficientVector,
    DesignBundle,
    TrialDataset,
    build_designs,
)
from .simulate import (
    GridCell,
    GridSummary,
    ScenarioSpec,
    error_variances,
    generate_dataset,
    population_ols_oracle,
    run_grid,
    true_effects,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "BootstrapSummary",
    "bootstrap_se",
    "FTestResult",
    "f_upper_tail",
    "first_stage_f",
    "TotalEffectFit",
    "natural_effects",
    "total_effect_fit",
    "HAUSMAN",
    "BootstrapCse",
    "FitResult",
    "SelectionProjection",
    "SpslResult",
    "closed_form_alpha",
    "estimate_alpha",
    "first_stage_project",
    "ols_fit",
    "spsl_fit",
    "tsls_fit",
    "ConfigError",
    "DataError",
    "DegenerateCombinationError",
    "IdentifiabilityError",
    "InfeasibleScenarioError",
    "MedshrinkError",
    "WeakInstrumentWarning",
    "LoadResult",
    "ReportTable",
    "RunConfig",
    "load_csv",
    "run_diagnose",
    "run_fit",
    "CausalEffects",
    "CoefficientVector",
    "DesignBundle",
    "TrialDataset",
    "build_designs",
    "GridCell",
    "GridSummary",
    "ScenarioSpec",
    "error_variances",
    "generate_dataset",
    "population_ols_oracle",
    "run_grid",
    "true_effects",
]
