"""Monte Carlo moment estimates and convergence studies.

Standard errors use the Gaussian approximation: for a sample covariance
``S_ij`` from ``n`` draws, ``Var S_ij ~ (S_ij**2 + S_ii S_jj) / (n - 1)``, which
reduces to ``2 S_ii**2 / (n - 1)`` on the diagonal.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import make_grid
from .special import as_hurst
from .walk import PathBatch, lemma2_variance_bounds, sample_paths
from .oracle import fbm_covariance

__all__ = [
    "MomentReport",
    "CovarianceComparison",
    "ConvergenceReport",
    "as_batch",
    "estimate_variance",
    "compare_covariance",
    "scaling_study",
    "fit_loglog",
    "Z_BAND",
]

Z_BAND = 4.0


@dataclass(frozen=True)
class MomentReport:
    estimator: str
    value: float
    std_error: float
    n_samples: int
    target: float
    z_score: float
    degenerate: bool = False

    def within(self, band: float = Z_BAND) -> bool:
        return not self.degenerate and abs(self.z_score) <= band


@dataclass(frozen=True)
class CovarianceComparison:
    times: np.ndarray
    empirical: np.ndarray
    target: np.ndarray
    std_error: np.ndarray
    z_scores: np.ndarray
    n_samples: int

    @property
    def max_abs_gap(self) -> float:
        return float(np.max(np.abs(self.empirical - self.target)))

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores)))

    def within(self, band: float = Z_BAND) -> bool:
        return bool(np.all(np.abs(self.z_scores) <= band))

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "empirical": self.empirical.tolist(),
            "target": self.target.tolist(),
            "std_error": self.std_error.tolist(),
            "z_scores": self.z_scores.tolist(),
            "max_abs_gap": self.max_abs_gap,
            "max_abs_z": self.max_abs_z,
            "n_samples": self.n_samples,
        }


@dataclass
class ConvergenceReport:
    """Discrepancy of the walk from its limit across a sweep of grid sizes."""

    H: float
    Ns: list
    metric: str
    values: list
    slope: float
    intercept: float
    residuals: list
    expected_slope: float
    slope_tolerance: float
    extra: dict = field(default_factory=dict)

    @property
    def slope_ok(self) -> bool:
        return abs(self.slope - self.expected_slope) <= self.slope_tolerance

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slope_ok"] = self.slope_ok
        return d


def as_batch(paths) -> PathBatch:
    if isinstance(paths, PathBatch):
        return paths
    return PathBatch.from_samples(paths)


def _hurst_of(batch: PathBatch, H):
    if H is None:
        if batch.hurst is None:
            raise ValueError("Hurst index unknown; pass H")
        H = batch.hurst
    return as_hurst(H).value


def estimate_variance(paths, t: float, scale: float = 1.0, H=None) -> MomentReport:
    """Sample variance of ``scale * X(t)`` against the fBm target ``t**(2H)``."""
    batch = as_batch(paths)
    n = len(batch)
    if n < 2:
        raise ValueError("need at least two paths")
    h = _hurst_of(batch, H)
    x = scale * batch.column(t)
    var = float(np.var(x, ddof=1))
    se = var * math.sqrt(2.0 / (n - 1))
    target = float(t) ** (2 * h)
    if se > 0:
        return MomentReport("variance", var, se, n, target, (var - target) / se)
    return MomentReport("variance", var, 0.0, n, target, math.nan, degenerate=True)


def compare_covariance(paths, probe_times, scale: float = 1.0, H=None) -> CovarianceComparison:
    """Empirical covariance of ``scale * X`` at ``probe_times`` versus fBm."""
    batch = as_batch(paths)
    n = len(batch)
    if n < 2:
        raise ValueError("need at least two paths")
    h = _hurst_of(batch, H)
    probe = np.asarray(probe_times, dtype=float)
    x = scale * np.column_stack([batch.column(t) for t in probe])
    emp = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    target = np.atleast_2d(fbm_covariance(h, probe[:, None], probe[None, :]))
    d = np.diag(emp)
    se = np.sqrt((emp ** 2 + np.outer(d, d)) / (n - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (emp - target) / se, np.nan)
    return CovarianceComparison(probe, emp, target, se, z, n)


def fit_loglog(dts, values) -> tuple[float, float, np.ndarray]:
    """Least-squares slope and intercept of ``log(values)`` on ``log(dts)``."""
    x = np.log(np.asarray(dts, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), y - (slope * x + intercept)


def scaling_study(H, Ns, seeds: int = 100, *, horizon: float = 1.0,
                  past_units: int = 4) -> ConvergenceReport:
    """Rate of the error terms as ``dt = 1/N`` shrinks.

    Below ``H = 1/2`` the metric is the largest gap ``|X - kernel sum|`` over all
    grid times and ``seeds`` paths (an estimate of the pathwise supremum, which
    should scale like ``dt**H``).  Above 1/2 it is the variance of the past error
    sum at ``t = horizon``, expected to scale like ``dt**(2H)``.  The past is
    truncated at ``past_units`` time units.
    """
    h = as_hurst(H)
    Ns = [int(n) for n in Ns]
    if len(Ns) < 3:
        raise ValueError("a scaling study needs at least three grid sizes")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("grid sizes must be strictly increasing")
    if h.value == 0.5:
        raise ValueError("no error terms at H = 1/2")
    values = []
    if h.value < 0.5:
        metric, expected, tol = "max_pathwise_gap", h.value, 0.05
        seed_list = range(seeds)
        for N in Ns:
            grid = make_grid(N, horizon, past_units * N)
            gap = (sample_paths(h, grid, seed_list).values
                   - sample_paths(h, grid, seed_list, form="kernel").values)
            values.append(float(np.max(np.abs(gap))))
    else:
        metric, expected, tol = "past_error_variance", 2 * h.value, 0.1
        for N in Ns:
            grid = make_grid(N, horizon, past_units * N)
            values.append(lemma2_variance_bounds(h, horizon, grid).delta_variance)
    dts = [1.0 / n for n in Ns]
    slope, intercept, resid = fit_loglog(dts, values)
    return ConvergenceReport(h.value, Ns, metric, values, slope, intercept,
                             resid.tolist(), expected, tol)
