"""Bayesian estimation of underreported event counts."""

from ._core import (
    CoefficientRow,
    Dataset,
    DataError,
    Record,
    SampleBatch,
    SamplerError,
    coefficient_summary,
    fit,
    marginal_log_pmf,
    percapita_scaling,
    prior_incidence_draws,
    prior_reporting_draws,
    run_cli,
    simulate,
)

__all__ = [
    "CoefficientRow",
    "Dataset",
    "DataError",
    "Record",
    "SampleBatch",
    "SamplerError",
    "coefficient_summary",
    "fit",
    "marginal_log_pmf",
    "percapita_scaling",
    "prior_incidence_draws",
    "prior_reporting_draws",
    "run_cli",
    "simulate",
]
