"""Dirichlet-process Burr(XII) mixture models for survival analysis.

A marginal Gibbs sampler for DP mixtures of Burr(XII) kernels with
right-censored data, data-driven hyperparameter elicitation,
posterior-predictive curves, goodness-of-fit metrics and a generic
sampler for Weibull and log-normal kernels.
"""

__version__ = "0.1.0"

from .datasets import Dataset, kaplan_meier, leukemia_fixture, load_csv, parse_csv, simulate_mixture
from .distributions import BurrParams, DomainError, burr_cdf, burr_pdf, burr_quantile
from .elicitation import ElicitationResult, elicit
from .gibbs import HyperPriors, Observation, SamplerConfig, SamplerError, SurvivalData, run_chain
from .gof import GofReport, gof_metrics
from .kernels import BurrKernel, LogNormalKernel, WeibullKernel, fit_generic, kernel_from_data
from .predictive import CurveEstimate, default_grid, predictive_curve, predictive_curves
from .trace import Trace

__all__ = [
    "BurrKernel", "BurrParams", "CurveEstimate", "Dataset", "DomainError", "ElicitationResult",
    "GofReport", "HyperPriors", "LogNormalKernel", "Observation", "SamplerConfig", "SamplerError",
    "SurvivalData", "Trace", "WeibullKernel", "burr_cdf", "burr_pdf", "burr_quantile",
    "default_grid", "elicit", "fit_generic", "gof_metrics", "kaplan_meier", "kernel_from_data",
    "leukemia_fixture", "load_csv", "parse_csv", "predictive_curve", "predictive_curves",
    "run_chain", "simulate_mixture",
]
