"""Tuning-parameter-free density estimation for auction valuations under Myerson regularity."""

from .distributions import (
    DistributionSpec,
    GapMixture,
    PerturbedUniform,
    RegularityReport,
    TruncExp,
    Uniform,
    check_regularity,
    sample,
    virtual_value,
)
from .empirical import StepFunction, ValueSample, ecdf, lambda_n, read_values_csv
from .estimator import DensityEstimate, estimate_at, estimate_density, fit
from .gcm import ConvexMinorant, gcm_of_step, left_derivative, switching_check
from .inference import ChernoffApprox, InferenceResult, chernoff_quantile, chernoff_scale, confidence_interval, estimate_f_prime
from .minimax import MinimaxCertificate, build_certificate, delta_schedule, hellinger_sq
from .montecarlo import McConfig, McReport, kde_baseline, run_coverage_experiment, run_rate_experiment

__version__ = "0.1.0"
