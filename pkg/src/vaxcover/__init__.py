"""Trivalent-vaccine coverage estimation from antibody count tables.

Given the 8-cell antibody-status counts of one age cohort, the package
inverts the product-mixture forward model in closed form: coverage,
per-disease exposure and per-disease seroconversion all satisfy
quadratic equations whose coefficients are exact polynomial invariants
of the 2x2x2 count tensor.  Validity gates decide, in exact arithmetic,
whether the resulting rates are statistically meaningful.  A seeded
forward simulator and a derivative-free maximum-likelihood fitter serve
as independent cross-checks, and a small CLI ties it together.
"""

from .algebra import (
    InvariantSet,
    LayerMatrix,
    as_count_vector,
    cubic_invariant,
    hyperdeterminant,
    hyperdeterminant_gradient,
    invariants,
    layer_det_diff,
    layer_matrix,
    marginal_det,
    total_count,
)
from .dataio import (
    CohortRecord,
    ParseError,
    SchemaError,
    build_reconstruction,
    build_report,
    load_dataset,
    load_params_table,
    mean_seroconversion,
    run_simulation,
)
from .estimators import CoverageEstimator, MLECoverageEstimator
from .inversion import (
    DegenerateDiscriminant,
    EmptyCohort,
    EstimateResult,
    EstimationError,
    SeroconversionUndefined,
    SingularLayer,
    ValidityLevel,
    ValidityReport,
    check_validity,
    coverage_from_invariants,
    estimate,
    residual,
    solve_both,
)
from .mle import FitConfig, FitResult, NonConvergenceWarning, fit_counts, objective_value
from .model import (
    ModelParams,
    expected_counts,
    forward,
    marginal_prevalence,
    sample_cohort,
)

__version__ = "0.1.0"

__all__ = [
    "CohortRecord",
    "CoverageEstimator",
    "DegenerateDiscriminant",
    "EmptyCohort",
    "EstimateResult",
    "EstimationError",
    "FitConfig",
    "FitResult",
    "InvariantSet",
    "LayerMatrix",
    "MLECoverageEstimator",
    "ModelParams",
    "NonConvergenceWarning",
    "ParseError",
    "SchemaError",
    "SeroconversionUndefined",
    "SingularLayer",
    "ValidityLevel",
    "ValidityReport",
    "as_count_vector",
    "build_reconstruction",
    "build_report",
    "check_validity",
    "coverage_from_invariants",
    "cubic_invariant",
    "estimate",
    "expected_counts",
    "fit_counts",
    "forward",
    "hyperdeterminant",
    "hyperdeterminant_gradient",
    "invariants",
    "layer_det_diff",
    "layer_matrix",
    "load_dataset",
    "load_params_table",
    "marginal_det",
    "marginal_prevalence",
    "mean_seroconversion",
    "objective_value",
    "residual",
    "run_simulation",
    "sample_cohort",
    "solve_both",
    "total_count",
]
