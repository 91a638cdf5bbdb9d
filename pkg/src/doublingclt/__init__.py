"""CLT certification for Birkhoff averages of the angle-doubling map.

Digit-exact simulation of the doubling map, closed-form moment and
variance computations for dyadic step functions and truncated cosine
series, a dependency-neighborhood Wasserstein bound, and empirical
Wasserstein-1 estimators that together certify the 1/sqrt(n) normal
approximation rate.
"""

from .bitstream import DigitStream, DyadicWindow, generate, split_seed, window
from .exact_stats import (
    ExactStats,
    ZeroVarianceError,
    abs_moment,
    compute_exact_stats,
    covariance,
    dependency_bound,
    fourier_sum_variance,
    stein_bound,
    sum_variance,
)
from .functions import (
    FourierFunction,
    FunctionSpec,
    StepFunction,
    center,
    eval_fourier,
    eval_step,
    is_degenerate,
    mean,
    project_to_step,
    projection_l2_error,
)
from .montecarlo import (
    Budget,
    SampleSet,
    paired_l2_distance,
    replicate_seeds,
    sample_normalized_sums,
)
from .wasserstein import (
    W1Report,
    l2_paired,
    normal_cdf,
    normal_quantile,
    w1_normal_bootstrap_se,
    w1_paired,
    w1_to_normal,
)

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "DigitStream",
    "DyadicWindow",
    "ExactStats",
    "FourierFunction",
    "FunctionSpec",
    "SampleSet",
    "StepFunction",
    "W1Report",
    "ZeroVarianceError",
    "abs_moment",
    "center",
    "compute_exact_stats",
    "covariance",
    "dependency_bound",
    "eval_fourier",
    "eval_step",
    "fourier_sum_variance",
    "generate",
    "is_degenerate",
    "l2_paired",
    "mean",
    "normal_cdf",
    "normal_quantile",
    "paired_l2_distance",
    "project_to_step",
    "projection_l2_error",
    "replicate_seeds",
    "sample_normalized_sums",
    "split_seed",
    "stein_bound",
    "sum_variance",
    "w1_normal_bootstrap_se",
    "w1_paired",
    "w1_to_normal",
    "window",
]
