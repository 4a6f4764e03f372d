"""Exact fractional Brownian motion on a finite set of times.

Used as the reference the walk is compared against: the covariance function
and dense Cholesky sampling.  Normals are produced from the same counter-based
generator family as the coin tosses, under a separate domain tag.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.special import ndtri

from .grid import GridSpec, NORMAL_DOMAIN, uniform_draws
from .special import as_hurst
from .walk import PathBatch, PathSample

__all__ = [
    "OracleError",
    "CovarianceMatrix",
    "fbm_covariance",
    "covariance_matrix",
    "exact_fbm_sample",
    "exact_fbm_batch",
    "DEFAULT_SIZE_CAP",
]

DEFAULT_SIZE_CAP = 2048
_JITTER_STEPS = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


class OracleError(LinAlgError):
    """Covariance factorisation failed within the jitter budget."""


def fbm_covariance(H, s, t):
    """``E[X_s X_t] = (s^2H + t^2H - |t-s|^2H) / 2``; broadcasts over arrays."""
    h = as_hurst(H).value
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("fbm_covariance needs nonnegative times")
    out = 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(t - s) ** (2 * h))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    times: np.ndarray
    entries: np.ndarray = field(repr=False)
    factor: np.ndarray = field(repr=False)
    jitter: float = 0.0


def covariance_matrix(H, times, *, cap: int = DEFAULT_SIZE_CAP) -> CovarianceMatrix:
    """Covariance at sorted positive ``times`` with its lower Cholesky factor.

    If the factorisation breaks down, up to 1e-10 is added to the diagonal;
    the amount used is recorded in ``jitter``.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-d sequence")
    if t.size > cap:
        raise ValueError(f"{t.size} times exceed the dense factorisation cap of {cap}")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be positive and strictly increasing")
    cov = fbm_covariance(H, t[:, None], t[None, :])
    cov = np.atleast_2d(cov)
    cov = 0.5 * (cov + cov.T)
    for jitter in _JITTER_STEPS:
        try:
            L = cholesky(cov + jitter * np.eye(t.size), lower=True)
        except LinAlgError:
            continue
        return CovarianceMatrix(t, cov, L, jitter)
    raise OracleError(f"covariance for H={as_hurst(H).value} is not factorisable "
                      f"with diagonal jitter <= {_JITTER_STEPS[-1]:g}")


def _normals(seeds, n: int) -> np.ndarray:
    return ndtri(uniform_draws(seeds, n, NORMAL_DOMAIN))


def exact_fbm_batch(H, times, seeds, *, cap: int = DEFAULT_SIZE_CAP) -> PathBatch:
    """One exact fBm draw per seed at ``times``; shape (len(seeds), len(times))."""
    h = as_hurst(H)
    cm = covariance_matrix(h, times, cap=cap)
    z = _normals(np.atleast_1d(seeds), cm.times.size)
    return PathBatch(cm.times, z @ cm.factor.T, None, True, h.value)


def exact_fbm_sample(H, grid: GridSpec, seed: int, *, cap: int = DEFAULT_SIZE_CAP) -> PathSample:
    """Exact fBm at the grid times ``dt, ..., horizon`` with ``X(0) = 0``."""
    h = as_hurst(H)
    times = grid.times[1:]
    vals = exact_fbm_batch(h, times, [seed], cap=cap).values[0]
    return PathSample(grid, np.concatenate(([0.0], vals)), scaled=True, hurst=h.value,
                      form="exact", seed=int(seed))
