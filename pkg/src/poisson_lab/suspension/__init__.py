"""Poisson suspensions as finite particle systems, and checks of their defining properties."""
from .checks import (
    additivity_scaling_check,
    covariance_identity_check,
    distribution_tests,
    no_multiplicity_check,
    replicate_counts,
)
from .estimate import renewal_count_series, suspension_entropy_estimate
from .marked import MarkedModel, marked_conditional_entropy, se_scaling_slope
from .particles import CountSeries, PointConfiguration, evolve, required_halo, sample_initial_configuration
from .stats import bonferroni, independence_test, poisson_gof, pvalue_uniformity, two_sample_test

__all__ = [
    "CountSeries",
    "MarkedModel",
    "PointConfiguration",
    "additivity_scaling_check",
    "bonferroni",
    "covariance_identity_check",
    "distribution_tests",
    "evolve",
    "independence_test",
    "marked_conditional_entropy",
    "no_multiplicity_check",
    "poisson_gof",
    "pvalue_uniformity",
    "renewal_count_series",
    "replicate_counts",
    "required_halo",
    "sample_initial_configuration",
    "se_scaling_slope",
    "suspension_entropy_estimate",
    "two_sample_test",
]
