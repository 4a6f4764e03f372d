"""Weighted Bernoulli random walk approximation to fractional Brownian motion."""
from importlib.metadata import PackageNotFoundError, version as _version

from .grid import BernoulliStream, GridSpec, bernoulli_stream, grid_sum_convention, make_grid
from .oracle import exact_fbm_batch, exact_fbm_sample, fbm_covariance
from .special import (
    DomainError,
    HurstIndex,
    coefficient_K,
    gamma_fn,
    scaling_constant_c,
    zeta,
    zeta_tail,
)
from .stats import compare_covariance, estimate_variance, scaling_study
from .walk import (
    PathBatch,
    PathSample,
    auto_grid,
    increment,
    lemma2_variance_bounds,
    lemma3_pathwise_bound,
    past_horizon_for_tolerance,
    path_coefficient,
    path_incremental,
    path_kernel,
    sample_at_times,
    sample_paths,
    weight,
)

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "BernoulliStream",
    "DomainError",
    "GridSpec",
    "HurstIndex",
    "PathBatch",
    "PathSample",
    "auto_grid",
    "bernoulli_stream",
    "coefficient_K",
    "compare_covariance",
    "estimate_variance",
    "exact_fbm_batch",
    "exact_fbm_sample",
    "fbm_covariance",
    "gamma_fn",
    "grid_sum_convention",
    "increment",
    "lemma2_variance_bounds",
    "lemma3_pathwise_bound",
    "make_grid",
    "past_horizon_for_tolerance",
    "path_coefficient",
    "path_incremental",
    "path_kernel",
    "sample_at_times",
    "sample_paths",
    "scaling_constant_c",
    "scaling_study",
    "weight",
    "zeta",
    "zeta_tail",
]
