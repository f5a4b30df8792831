"""datekit: sparse two-sample signal recovery under column-wise dependence.

The package rotates the data through the (known or estimated) precision
matrix of the pooled covariance, screens coordinates by a thresholded
chi-square style statistic, and excises the spurious survivors with an
exhaustive L0-penalized fit inside each component of the precision graph.
A Benjamini-Hochberg baseline, a Monte Carlo harness, phase-boundary and
theoretical-bound evaluators, and a CLI round out the toolkit.
"""

from .baselines import TestResult, bh_select, t_cdf, two_sample_t
from .covmodels import (
    CovarianceSpec,
    SignalSpec,
    TwoSampleData,
    ar1_precision,
    build_covariance,
    generate_dataset,
    known_precision_from_meta,
    pooled_precision,
    signal_count,
)
from .date import (
    DateConfig,
    RecoveryResult,
    TuningParams,
    compute_statistics,
    connected_components,
    estimate_tuning,
    excise_component,
    oracle_tuning,
    regularize_precision,
    run_date,
    threshold_survivors,
    transform_data,
)
from .errors import (
    DatekitError,
    DimensionMismatch,
    InvalidBand,
    InvalidDomain,
    NoExceedances,
    NotPositiveDefinite,
    SampleOrder,
)
from .evaluation import (
    ConfusionCounts,
    PhaseCurves,
    SimulationConfig,
    SimulationReport,
    aggregate,
    confusion,
    log_level_penalty,
    mfnr_bound_under_fdr,
    phase_boundaries,
    risk_lower_bound,
    run_sweep,
)
from .kernels import BACKEND
from .linalg import cholesky, mvn_sample, omega_bounds, spd_inverse
from .precision import (
    CvConfig,
    PrecisionEstimate,
    apply_threshold,
    banded_cholesky_precision,
    estimate_precision,
    invert_regularized,
    one_sample_transform,
    pooled_residuals,
    sample_covariance,
    select_band,
    select_threshold,
    thresholded_covariance,
)
from .rng import SeededRng

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfusionCounts",
    "CovarianceSpec",
    "CvConfig",
    "DateConfig",
    "DatekitError",
    "DimensionMismatch",
    "InvalidBand",
    "InvalidDomain",
    "NoExceedances",
    "NotPositiveDefinite",
    "PhaseCurves",
    "PrecisionEstimate",
    "RecoveryResult",
    "SampleOrder",
    "SeededRng",
    "SignalSpec",
    "SimulationConfig",
    "SimulationReport",
    "TestResult",
    "TuningParams",
    "TwoSampleData",
    "aggregate",
    "apply_threshold",
    "ar1_precision",
    "banded_cholesky_precision",
    "bh_select",
    "build_covariance",
    "cholesky",
    "compute_statistics",
    "confusion",
    "connected_components",
    "estimate_precision",
    "estimate_tuning",
    "excise_component",
    "generate_dataset",
    "invert_regularized",
    "known_precision_from_meta",
    "log_level_penalty",
    "mfnr_bound_under_fdr",
    "mvn_sample",
    "omega_bounds",
    "one_sample_transform",
    "oracle_tuning",
    "phase_boundaries",
    "pooled_precision",
    "pooled_residuals",
    "regularize_precision",
    "risk_lower_bound",
    "run_date",
    "run_sweep",
    "sample_covariance",
    "select_band",
    "select_threshold",
    "signal_count",
    "spd_inverse",
    "t_cdf",
    "threshold_survivors",
    "thresholded_covariance",
    "transform_data",
    "two_sample_t",
]
