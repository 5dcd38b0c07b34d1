"""Directed exponential network model with reciprocity: sampling, likelihood,
coordinate-ascent maximum likelihood, grid-restricted fitting and simulation studies."""

from .discretize import (
    DiscretizedFit,
    Grid,
    brute_force_discrete_mle,
    build_uniform_grid,
    discretized_fit,
    optimal_spacing,
    project_to_grid,
)
from .estimator import FitConfig, FitResult, coordinate_descent_fit, estimate_mu_bar, fit_statistics
from .harness import ExperimentConfig, run_experiment, summarize
from .metrics import ErrorReport, error_report, rate_predictor, shift_adjusted_errors
from .model import DyadOutcome, DyadPmf, GlobalParams, Network, NodeParams, dyad_pmf_dense, dyad_pmf_sparse, total_loglik
from .sampler import ParamSpec, gen_params, read_edgelist, sample_network, write_edgelist

__all__ = [
    "DiscretizedFit", "Grid", "brute_force_discrete_mle", "build_uniform_grid", "discretized_fit",
    "optimal_spacing", "project_to_grid", "FitConfig", "FitResult", "coordinate_descent_fit",
    "estimate_mu_bar", "fit_statistics", "ExperimentConfig", "run_experiment", "summarize",
    "ErrorReport", "error_report", "rate_predictor", "shift_adjusted_errors", "DyadOutcome",
    "DyadPmf", "GlobalParams", "Network", "NodeParams", "dyad_pmf_dense", "dyad_pmf_sparse",
    "total_loglik", "ParamSpec", "gen_params", "read_edgelist", "sample_network", "write_edgelist",
]
