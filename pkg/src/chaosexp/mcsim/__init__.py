"""Exact simulation of the Gaussian models and estimators on the resulting statistics."""

from .core import (
    McConfig,
    PairModel,
    PathBatch,
    Perturbation,
    perturbation_term,
    perturbed_statistic,
    sample_covariance,
    sample_pair,
    sample_stationary,
    simulate,
    statistic_qv,
)
from .stats import (
    density_report,
    empirical_charfun,
    empirical_density,
    functional_gap,
    joint_clt_check,
    kolmogorov_gaps,
)

__all__ = [
    "McConfig",
    "PairModel",
    "PathBatch",
    "Perturbation",
    "density_report",
    "empirical_charfun",
    "empirical_density",
    "functional_gap",
    "joint_clt_check",
    "kolmogorov_gaps",
    "perturbation_term",
    "perturbed_statistic",
    "sample_covariance",
    "sample_pair",
    "sample_stationary",
    "simulate",
    "statistic_qv",
]
