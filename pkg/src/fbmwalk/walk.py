"""The fractional random walk.

The increment at grid time ``s`` is

    dX(s) = K * dt**(H-1/2) * dB(s) + sum_{r<s} (H-1/2) (s-r)**(H-3/2) dt dB(r)

with ``dB = sqrt(dt) * omega`` built from coin tosses.  The path is available
in three algebraically linked forms:

* incremental: cumulative sum of the increments above;
* coefficient: ``X(t) = sum_r C(r, t) dB(r)`` after swapping the order of the
  double sum; below ``H = 1/2`` the coefficients for ``r >= 0`` are zeta tails,
  which is where the constant ``K`` cancels the divergent history weight;
* kernel: the discretised moving-average kernel
  ``(t-r)**(H-1/2) - (-r)_+**(H-1/2)`` applied to the same tosses, which the
  walk approaches as ``dt -> 0``.

The infinite past is truncated at ``-M * dt`` where ``M`` is the grid's
``past_horizon_steps``; all three forms use the same truncation, so the
identities between them are exact up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.signal import fftconvolve

from . import _kernels
from .grid import (
    COUNTER_OFFSET,
    BernoulliStream,
    GridError,
    GridSpec,
    bernoulli_draws,
    make_grid,
    stream_key,
)
from .special import (
    DomainError,
    HurstIndex,
    as_hurst,
    coefficient_K,
    scaling_constant_c,
    zeta,
    zeta_tail,
)

__all__ = [
    "PathSample",
    "PathBatch",
    "CoefficientTable",
    "ErrorTermReport",
    "weight",
    "weight_table",
    "increment",
    "increments",
    "path_incremental",
    "coefficient_table",
    "path_coefficient",
    "path_kernel",
    "walk_covariance",
    "sample_paths",
    "sample_at_times",
    "error_epsilon",
    "error_delta",
    "error_epsilon_tilde",
    "error_delta_tilde",
    "error_report",
    "sandwich_check",
    "lemma2_variance_bounds",
    "lemma2_bounds",
    "lemma3_pathwise_bound",
    "lemma3_constant",
    "past_horizon_for_tolerance",
    "tail_variance_bound",
    "auto_grid",
    "DEFAULT_REL_VAR_TOL",
]

DEFAULT_REL_VAR_TOL = 1e-3
# largest dense (times x draws) matrix built in one piece
_DENSE_LIMIT = 1 << 22
FORMS = ("incremental", "coefficient", "kernel")


@dataclass(frozen=True, eq=False)
class PathSample:
    """Path values at ``0, dt, ..., horizon``; constant between grid points."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    scaled: bool = False
    hurst: float | None = None
    form: str = "incremental"
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_steps + 1,):
            raise ValueError(f"expected {self.grid.n_steps + 1} values, got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, t: float) -> float:
        """Value at any ``t`` in ``[0, horizon]`` (right-continuous step function)."""
        if not 0 <= t <= self.grid.horizon:
            raise GridError(f"time {t!r} outside [0, {self.grid.horizon}]")
        return float(self.values[int(math.floor(t * self.grid.n_per_unit + 1e-9))])

    def scale(self, c: float | None = None) -> "PathSample":
        """Multiply by ``c`` (default: the scaling constant of ``hurst``)."""
        if self.scaled:
            raise ValueError("path is already scaled")
        if c is None:
            if self.hurst is None:
                raise ValueError("no Hurst index recorded; pass the constant explicitly")
            c = scaling_constant_c(self.hurst)
        return replace(self, values=c * self.values, scaled=True)


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Many paths observed at common times; ``values`` has shape (paths, times)."""

    times: np.ndarray
    values: np.ndarray = field(repr=False)
    grid: GridSpec | None = None
    scaled: bool = False
    hurst: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[1] != t.shape[0]:
            raise ValueError("values must have one column per time")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_samples(cls, paths) -> "PathBatch":
        paths = list(paths)
        if not paths:
            raise ValueError("empty path collection")
        grid = paths[0].grid
        for p in paths[1:]:
            if p.grid != grid:
                raise GridError("paths live on different grids")
        scaled = {p.scaled for p in paths}
        if len(scaled) > 1:
            raise ValueError("mixture of scaled and unscaled paths")
        return cls(grid.times, np.stack([p.values for p in paths]), grid,
                   scaled.pop(), paths[0].hurst)

    def __len__(self) -> int:
        return self.values.shape[0]

    def column(self, t: float) -> np.ndarray:
        idx = np.flatnonzero(np.abs(self.times - t) <= 1e-9 * max(1.0, abs(t)))
        if idx.size == 0:
            raise GridError(f"time {t!r} not observed in this batch")
        return self.values[:, idx[0]]

    def scale(self, c: float) -> "PathBatch":
        return replace(self, values=c * self.values, scaled=True)


# weights -----------------------------------------------------------------


def _lag_powers(a: float, lags: np.ndarray) -> np.ndarray:
    # lags**(a - 1) in log space
    return np.exp((a - 1.0) * np.log(lags))


def weight(H, lag_steps, dt: float):
    """History weight ``(H-1/2) * (k*dt)**(H-3/2) * dt`` for lag ``k >= 1``."""
    h = as_hurst(H)
    k = np.asarray(lag_steps)
    if np.any(k < 1) or np.any(np.mod(k, 1) != 0):
        raise ValueError("lag must be a positive integer number of steps")
    a = h.exponent
    w = a * np.exp((a - 1.0) * np.log(k.astype(float)) + a * math.log(dt))
    return float(w) if np.ndim(lag_steps) == 0 else w


@lru_cache(maxsize=64)
def _filter(h: float, n_per_unit: int, length: int) -> np.ndarray:
    hi = HurstIndex(h)
    dt = 1.0 / n_per_unit
    out = np.empty(length)
    out[0] = coefficient_K(hi) * dt ** hi.exponent
    if length > 1:
        out[1:] = weight(hi, np.arange(1, length), dt)
    out.setflags(write=False)
    return out


def weight_table(H, grid: GridSpec) -> np.ndarray:
    """Causal filter ``f`` with ``dX(s) = sum_j f[j] dB(s - j*dt)``.

    ``f[0]`` is the weight of the current toss, ``f[j]`` for ``j >= 1`` the
    history weights.  Cached per (H, grid) and read-only.
    """
    return _filter(as_hurst(H).value, grid.n_per_unit, grid.n_draws)


def _lagged_matrix(filt: np.ndarray, grid: GridSpec) -> np.ndarray:
    # T[i, s] = filt[M + s - i] for i <= M + s, else 0
    M, L = grid.past_horizon_steps, grid.n_draws
    lag = M + np.arange(grid.n_steps)[None, :] - np.arange(L)[:, None]
    return np.where(lag >= 0, filt[np.clip(lag, 0, L - 1)], 0.0)


def _increments_matrix(H, grid: GridSpec, db: np.ndarray, method: str) -> np.ndarray:
    filt = weight_table(H, grid)
    M, n = grid.past_horizon_steps, grid.n_steps
    if method == "fft":
        full = fftconvolve(db, filt[None, :], axes=1)
        return full[:, M:M + n]
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    if grid.n_draws * n <= _DENSE_LIMIT:
        return db @ _lagged_matrix(filt, grid)
    out = np.empty((db.shape[0], n))
    for s in range(n):
        i = M + s
        out[:, s] = db[:, : i + 1] @ filt[i::-1]
    return out


def increments(H, stream: BernoulliStream, *, method: str = "direct") -> np.ndarray:
    """Increments ``dX(s)`` for ``s = 0, dt, ..., horizon - dt``."""
    return _increments_matrix(H, stream.grid, stream.delta_b[None, :], method)[0]


def increment(H, stream: BernoulliStream, s: float) -> float:
    """Single increment ``dX(s)`` at a nonnegative grid time ``s``."""
    grid = stream.grid
    k = grid.index_of(s)
    if not 0 <= k < grid.n_steps:
        raise GridError(f"increment time {s!r} outside [0, horizon)")
    filt = weight_table(H, grid)
    i = k + grid.past_horizon_steps
    db = stream.delta_b
    return float(np.dot(filt[: i + 1], db[i::-1]))


def _cumulate(dx: np.ndarray) -> np.ndarray:
    return np.concatenate((np.zeros((dx.shape[0], 1)), np.cumsum(dx, axis=1)), axis=1)


def path_incremental(H, stream: BernoulliStream, *, method: str = "direct") -> PathSample:
    """Unscaled walk as the running sum of its increments, ``X(0) = 0``.

    ``method="fft"`` convolves by FFT; it agrees with the direct sum to ~1e-12.
    """
    h = as_hurst(H)
    x = _cumulate(_increments_matrix(h, stream.grid, stream.delta_b[None, :], method))[0]
    return PathSample(stream.grid, x, hurst=h.value, form="incremental", seed=stream.seed)


# coefficient form --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """``X(t) = sum_k coeffs[k + M] * dB(k*dt)`` over ``-M <= k < t/dt``."""

    H: HurstIndex
    grid: GridSpec
    t: float
    coeffs: np.ndarray = field(repr=False)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.grid.first_index, self.grid.first_index + self.coeffs.size)


@lru_cache(maxsize=8)
def _prefix_weights(h: HurstIndex, dt: float, length: int) -> np.ndarray:
    # S[m] = sum_{j=1}^{m-1} w_j for m = 0..length (S[0] = S[1] = 0)
    S = np.zeros(length + 1)
    if length >= 2:
        S[2:] = np.cumsum(weight(h, np.arange(1, length), dt))
    S.setflags(write=False)
    return S


def _future_coefficients(h: HurstIndex, dt: float, lags: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Coefficient of a toss ``m = (t - r)/dt >= 1`` steps before ``t``, for ``r >= 0``."""
    a = h.exponent
    if h.uses_zeta_branch:
        # K dt^a + sum_{j=1}^{m-1} w_j == -a dt^a * sum_{n>=m} n^(a-1) exactly
        return -a * dt ** a * zeta_tail(1.0 - a, lags)
    return coefficient_K(h) * dt ** a + S[lags]


def _coefficient_rows(h: HurstIndex, grid: GridSpec, t_steps: np.ndarray) -> np.ndarray:
    """Rows ``C(k, t)`` for each ``t`` in ``t_steps``, columns ``k = -M..n-1``."""
    M, L = grid.past_horizon_steps, grid.n_draws
    dt = grid.dt
    S = _prefix_weights(h, dt, L + 1)
    k = np.arange(-M, grid.n_steps)
    out = np.zeros((len(t_steps), L))
    past = k < 0
    for row, K in enumerate(t_steps):
        K = int(K)
        # r < 0: sum_{s=0}^{t} w(s - r) = S[K - k] - S[-k]
        out[row, past] = S[K - k[past]] - S[-k[past]]
        fut = (k >= 0) & (k < K)
        if fut.any():
            out[row, fut] = _future_coefficients(h, dt, K - k[fut], S)
    return out


def _apply_rows(rows_fn, h: HurstIndex, grid: GridSpec, steps: np.ndarray,
                db: np.ndarray) -> np.ndarray:
    """``db @ rows.T`` without holding more than ``_DENSE_LIMIT`` row entries."""
    chunk = max(1, _DENSE_LIMIT // grid.n_draws)
    out = np.empty((db.shape[0], len(steps)))
    for lo in range(0, len(steps), chunk):
        out[:, lo:lo + chunk] = db @ rows_fn(h, grid, steps[lo:lo + chunk]).T
    return out


def coefficient_table(H, grid: GridSpec, t: float) -> CoefficientTable:
    h = as_hurst(H)
    K = grid.index_of(t)
    if not 0 <= K <= grid.n_steps:
        raise GridError(f"time {t!r} outside [0, horizon]")
    row = _coefficient_rows(h, grid, np.array([K]))[0, : grid.past_horizon_steps + K]
    row.setflags(write=False)
    return CoefficientTable(h, grid, K * grid.dt, row)


def path_coefficient(H, stream: BernoulliStream) -> PathSample:
    """Walk evaluated through the reordered double sum ``sum_r C(r, t) dB(r)``."""
    h = as_hurst(H)
    grid = stream.grid
    x = _apply_rows(_coefficient_rows, h, grid, np.arange(grid.n_steps + 1),
                    stream.delta_b[None, :])[0]
    return PathSample(grid, x, hurst=h.value, form="coefficient", seed=stream.seed)


# kernel form -------------------------------------------------------------


def _pow_diff(x: np.ndarray, y: np.ndarray, a: float) -> np.ndarray:
    """``x**a - y**a`` for ``x > y > 0`` without cancellation."""
    return y ** a * np.expm1(a * np.log1p((x - y) / y))


def _kernel_rows(h: HurstIndex, grid: GridSpec, t_steps: np.ndarray) -> np.ndarray:
    a = h.exponent
    dt = grid.dt
    M, L = grid.past_horizon_steps, grid.n_draws
    k = np.arange(-M, grid.n_steps).astype(float)
    out = np.zeros((len(t_steps), L))
    past = k < 0
    for row, K in enumerate(t_steps):
        out[row, past] = dt ** a * _pow_diff(K - k[past], -k[past], a)
        fut = (k >= 0) & (k < K)
        out[row, fut] = dt ** a * (K - k[fut]) ** a
    return out


def path_kernel(H, stream: BernoulliStream) -> PathSample:
    """Moving-average kernel sum ``sum_r ((t-r)^a - (-r)_+^a) dB(r)``, ``a = H-1/2``."""
    h = as_hurst(H)
    grid = stream.grid
    x = _apply_rows(_kernel_rows, h, grid, np.arange(grid.n_steps + 1),
                    stream.delta_b[None, :])[0]
    return PathSample(grid, x, hurst=h.value, form="kernel", seed=stream.seed)


def walk_covariance(H, grid: GridSpec, times) -> np.ndarray:
    """Exact covariance of the unscaled walk at ``times`` (tosses are independent,
    so it is ``sum_r C(r,s) C(r,t) dt`` over the truncated past)."""
    h = as_hurst(H)
    steps = np.array([grid.index_of(t) for t in np.atleast_1d(times)])
    C = _coefficient_rows(h, grid, steps)
    return (C @ C.T) * grid.dt


# batches -----------------------------------------------------------------


def _batch_draws(grid: GridSpec, seeds) -> np.ndarray:
    return bernoulli_draws(seeds, grid.first_index, grid.n_steps) * math.sqrt(grid.dt)


def sample_paths(H, grid: GridSpec, seeds, *, form: str = "incremental",
                 method: str = "direct") -> PathBatch:
    """Full-grid paths for each seed (stream of ``seed`` on ``grid``)."""
    h = as_hurst(H)
    db = _batch_draws(grid, seeds)
    steps = np.arange(grid.n_steps + 1)
    if form == "incremental":
        x = _cumulate(_increments_matrix(h, grid, db, method))
    elif form == "coefficient":
        x = _apply_rows(_coefficient_rows, h, grid, steps, db)
    elif form == "kernel":
        x = _apply_rows(_kernel_rows, h, grid, steps, db)
    else:
        raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")
    return PathBatch(grid.times, x, grid, False, h.value)


def sample_at_times(H, grid: GridSpec, times, seeds, *, form: str = "coefficient") -> PathBatch:
    """Paths observed only at ``times`` for many seeds.

    Coin tosses are regenerated on the fly from their counters, so memory does
    not grow with the past horizon; this is the route for long pasts and
    large path counts.  Values equal those of the single-stream generators up
    to rounding.
    """
    h = as_hurst(H)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    steps = np.array([grid.index_of(t) for t in times])
    if np.any(steps < 0) or np.any(steps > grid.n_steps):
        raise GridError("observation times must lie in [0, horizon]")
    if form == "coefficient":
        rows = _coefficient_rows(h, grid, steps)
    elif form == "kernel":
        rows = _kernel_rows(h, grid, steps)
    else:
        raise ValueError("sample_at_times supports the coefficient and kernel forms")
    # align the first column with a word boundary of the toss counter
    lo = grid.first_index + COUNTER_OFFSET
    lead = lo % 64
    total = lead + rows.shape[1]
    trail = (-total) % 64
    coef = np.ascontiguousarray(np.pad(rows, ((0, 0), (lead, trail))))
    keys = np.array([stream_key(int(s)) for s in np.atleast_1d(seeds)], dtype=np.uint64)
    n_threads = _kernels.configure_threads()
    vals = _kernels.linear_functionals(keys, coef, np.uint64(lo >> 6), n_threads)
    return PathBatch(times, vals * math.sqrt(grid.dt), grid, False, h.value)


# error terms -------------------------------------------------------------


def _require(h: HurstIndex, super_: bool, name: str):
    if super_ and not h.value > 0.5:
        raise DomainError(f"{name} is defined for H > 1/2, got H={h.value}")
    if not super_ and not h.uses_zeta_branch:
        raise DomainError(f"{name} is defined for H < 1/2, got H={h.value}")


def _steps(grid: GridSpec, r: float, t: float) -> tuple[int, int]:
    return grid.index_of(r), grid.index_of(t)


def _window_sums(a: float, k: np.ndarray, K: int) -> np.ndarray:
    """``sum_{j=k}^{k+K-1} j**(a-1)`` for each ``k >= 1``."""
    k = np.asarray(k, dtype=np.int64)
    if K == 0:
        return np.zeros(k.shape)
    top = int(k.max()) + K
    powers = _lag_powers(a, np.arange(1, top, dtype=float))
    P = np.concatenate(([0.0, 0.0], np.cumsum(powers)))  # P[m] = sum_{j=1}^{m-1}
    return P[k + K] - P[k]


def _eps_values(h: HurstIndex, m: np.ndarray, dt: float) -> np.ndarray:
    # m = (t - r)/dt >= 1; sum_{j=1}^{m-1} a j^(a-1) - (m^a - 1)
    a = h.exponent
    m = np.asarray(m, dtype=np.int64)
    powers = _lag_powers(a, np.arange(1, max(int(m.max()), 1), dtype=float))
    P = np.concatenate(([0.0, 0.0], np.cumsum(powers)))
    sums = P[m]
    mf = m.astype(float)
    return dt ** a * (a * sums - _pow_diff(mf, np.ones(m.shape), a))


def _delta_values(h: HurstIndex, k: np.ndarray, K: int, dt: float) -> np.ndarray:
    # r = -k dt (k >= 1), t = K dt; sign flips for the tilde version
    a = h.exponent
    k = np.asarray(k, dtype=np.int64)
    sums = _window_sums(a, k, K)
    integral = _pow_diff((k + K).astype(float), k.astype(float), a) if K else np.zeros(k.shape)
    return dt ** a * (a * sums - integral)


def _eps_tilde_values(h: HurstIndex, m: np.ndarray, dt: float) -> np.ndarray:
    a = h.exponent
    m = np.asarray(m, dtype=np.int64)
    return dt ** a * (-a * zeta_tail(1.0 - a, m) - m.astype(float) ** a)


def error_epsilon(H, r: float, t: float, grid: GridSpec) -> float:
    """Riemann-sum error of the ``r >= 0`` history weights, ``H > 1/2``.

    Lies in ``[0, (H-1/2) dt**(H-1/2)]``.
    """
    h = as_hurst(H)
    _require(h, True, "error_epsilon")
    kr, kt = _steps(grid, r, t)
    if not 0 <= kr < kt:
        raise GridError("need 0 <= r < t")
    return float(_eps_values(h, np.array([kt - kr]), grid.dt)[0])


def error_delta(H, r: float, t: float, grid: GridSpec) -> float:
    """Riemann-sum error of the past (``r < 0``) weights, ``H > 1/2``.

    Lies in ``[0, (H-1/2) (-r)**(H-3/2) dt]``.
    """
    h = as_hurst(H)
    _require(h, True, "error_delta")
    kr, kt = _steps(grid, r, t)
    if kr >= 0:
        raise DomainError("error_delta needs r < 0")
    if kt < 0:
        raise GridError("need t >= 0")
    return float(_delta_values(h, np.array([-kr]), kt, grid.dt)[0])


def error_epsilon_tilde(H, r: float, t: float, grid: GridSpec) -> float:
    """Riemann-sum error of the zeta-tail coefficients, ``H < 1/2``.

    Lies in ``[0, -(H-1/2) (t-r)**(H-3/2) dt]``.
    """
    h = as_hurst(H)
    _require(h, False, "error_epsilon_tilde")
    kr, kt = _steps(grid, r, t)
    if not kr < kt:
        raise GridError("need r < t")
    return float(_eps_tilde_values(h, np.array([kt - kr]), grid.dt)[0])


def error_delta_tilde(H, r: float, t: float, grid: GridSpec) -> float:
    """Riemann-sum error of the past weights, ``H < 1/2``.

    Lies in ``[0, -(H-1/2) (-r)**(H-3/2) dt]``.
    """
    h = as_hurst(H)
    _require(h, False, "error_delta_tilde")
    kr, kt = _steps(grid, r, t)
    if kr >= 0:
        raise DomainError("error_delta_tilde needs r < 0")
    if kt < 0:
        raise GridError("need t >= 0")
    return float(-_delta_values(h, np.array([-kr]), kt, grid.dt)[0])


@dataclass(frozen=True)
class ErrorEntry:
    r: float
    t: float
    value: float
    lower_bound: float
    upper_bound: float
    within_bounds: bool


@dataclass(frozen=True)
class ErrorTermReport:
    H: HurstIndex
    grid: GridSpec
    which: str
    entries: list

    @property
    def all_within(self) -> bool:
        return all(e.within_bounds for e in self.entries)

    @property
    def worst_ratio(self) -> float:
        """Largest ``value / upper_bound`` over entries with a positive bound."""
        ratios = [e.value / e.upper_bound for e in self.entries if e.upper_bound > 0]
        return max(ratios, default=0.0)


_WHICH = ("epsilon", "delta", "epsilon_tilde", "delta_tilde")


def _error_arrays(h: HurstIndex, grid: GridSpec, which: str, K: int):
    """(r_steps, values, upper bounds) for every admissible r at ``t = K dt``."""
    a, dt = h.exponent, grid.dt
    M = grid.past_horizon_steps
    if which in ("epsilon", "epsilon_tilde"):
        kr = np.arange(0, K)
        m = K - kr
        if which == "epsilon":
            vals = _eps_values(h, m, dt)
            ub = np.full(m.shape, a * dt ** a)
        else:
            vals = _eps_tilde_values(h, m, dt)
            ub = -a * dt ** a * _lag_powers(a, m.astype(float))
    else:
        k = np.arange(1, M + 1)
        kr = -k
        vals = _delta_values(h, k, K, dt)
        ub = abs(a) * dt ** a * _lag_powers(a, k.astype(float))
        if which == "delta_tilde":
            vals = -vals
    return kr, vals, ub


def error_report(H, grid: GridSpec, which: str, t_values=None, *, rtol: float = 1e-12) -> ErrorTermReport:
    """Evaluate one error term on every grid pair ``(r, t)`` and check its bounds.

    ``rtol`` absorbs rounding at the bounds (relative to the upper bound).
    """
    h = as_hurst(H)
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    _require(h, not which.endswith("tilde"), f"error term {which}")
    if t_values is None:
        t_steps = range(1, grid.n_steps + 1)
    else:
        t_steps = [grid.index_of(t) for t in t_values]
    dt = grid.dt
    entries = []
    for K in t_steps:
        kr, vals, ub = _error_arrays(h, grid, which, K)
        slack = rtol * np.maximum(ub, 1e-300)
        ok = (vals >= -slack) & (vals <= ub + slack)
        entries.extend(
            ErrorEntry(i * dt, K * dt, float(v), 0.0, float(u), bool(o))
            for i, v, u, o in zip(kr, vals, ub, ok)
        )
    return ErrorTermReport(h, grid, which, entries)


def sandwich_check(H, grid: GridSpec, which: str, t_values=None, *,
                   rtol: float = 1e-12) -> tuple[float, float, bool]:
    """Array-only variant of :func:`error_report` for large grids.

    Returns ``(smallest value, largest value/upper bound, all within bounds)``.
    """
    h = as_hurst(H)
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    _require(h, not which.endswith("tilde"), f"error term {which}")
    if t_values is None:
        t_steps = range(1, grid.n_steps + 1)
    else:
        t_steps = [grid.index_of(t) for t in t_values]
    lo, worst, ok = math.inf, 0.0, True
    for K in t_steps:
        _, vals, ub = _error_arrays(h, grid, which, K)
        if vals.size == 0:
            continue
        slack = rtol * np.maximum(ub, 1e-300)
        ok &= bool(np.all(vals >= -slack) and np.all(vals <= ub + slack))
        lo = min(lo, float(vals.min()))
        pos = ub > 0
        if pos.any():
            worst = max(worst, float(np.max(vals[pos] / ub[pos])))
    return lo, worst, ok


class Lemma2Result(NamedTuple):
    eps_variance: float
    delta_variance: float
    passed: bool


def lemma2_bounds(H, t: float, dt: float) -> tuple[float, float]:
    """Upper bounds on the two error variances for ``H > 1/2``."""
    h = as_hurst(H)
    a = h.exponent
    return a * a * t * dt ** (2 * a), a * a * zeta(3.0 - 2.0 * h.value) * dt ** (2 * h.value)


def lemma2_variance_bounds(H, t: float, grid: GridSpec) -> Lemma2Result:
    """Variances ``sum eps^2 dt`` and ``sum delta^2 dt`` of the ``H > 1/2`` error sums
    at time ``t``, and whether both are within their bounds."""
    h = as_hurst(H)
    _require(h, True, "lemma2_variance_bounds")
    K = grid.index_of(t)
    if not 0 <= K <= grid.n_steps:
        raise GridError(f"time {t!r} outside [0, horizon]")
    dt = grid.dt
    _, eps, _ = _error_arrays(h, grid, "epsilon", K)
    _, dlt, _ = _error_arrays(h, grid, "delta", K)
    v_eps = math.fsum(eps * eps) * dt
    v_dlt = math.fsum(dlt * dlt) * dt
    b_eps, b_dlt = lemma2_bounds(h, K * dt, dt)
    return Lemma2Result(v_eps, v_dlt, bool(v_eps <= b_eps and v_dlt <= b_dlt))


class Lemma3Result(NamedTuple):
    max_discrepancy: float
    bound: float
    passed: bool


def lemma3_constant(H) -> float:
    """``2 * K``: sum of the two pathwise error constants for ``H < 1/2``."""
    h = as_hurst(H)
    return 2.0 * (-h.exponent) * zeta(1.5 - h.value)


def lemma3_pathwise_bound(H, stream: BernoulliStream) -> Lemma3Result:
    """Sup-norm gap between the walk and its kernel sum against ``2 K dt**H``."""
    h = as_hurst(H)
    _require(h, False, "lemma3_pathwise_bound")
    gap = np.max(np.abs(path_incremental(h, stream).values - path_kernel(h, stream).values))
    bound = lemma3_constant(h) * stream.grid.dt ** h.value
    return Lemma3Result(float(gap), bound, bool(gap <= bound))


# past truncation ---------------------------------------------------------

_SAFETY = 3.0


def tail_variance_bound(H, t: float, past: float) -> float:
    """Upper bound on ``sum_{r < -past} ((t-r)^a - (-r)^a)^2 dt`` (unscaled, no safety).

    From ``|(t+u)^a - u^a| <= |a| t u^(a-1)`` and an integral comparison.
    """
    h = as_hurst(H)
    a = h.exponent
    return a * a * t * t * past ** (2 * h.value - 2) / (2 - 2 * h.value)


def past_horizon_for_tolerance(H, horizon: float, rel_var_tol: float = DEFAULT_REL_VAR_TOL,
                               n_per_unit: int = 1) -> int:
    """Past steps ``M`` so the neglected kernel variance is below ``rel_var_tol * t**(2H)``.

    The comparison is made after scaling by ``c**2`` and with a safety factor of 3
    on the tail bound, for every ``t <= horizon`` (the worst case is the horizon).
    """
    h = as_hurst(H)
    if not rel_var_tol > 0:
        raise ValueError(f"rel_var_tol must be positive, got {rel_var_tol!r}")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    a = h.exponent
    if a == 0.0:
        return 1
    c2 = scaling_constant_c(h) ** 2
    e = 2.0 - 2.0 * h.value
    # c2 * SAFETY * a^2 T^2 L^(-e) / e <= tol T^(2H)  <=>  L >= (...)^(1/e)
    past = (_SAFETY * c2 * a * a * horizon ** e / (rel_var_tol * e)) ** (1.0 / e)
    return max(1, int(math.ceil(past * n_per_unit)))


def auto_grid(H, n_per_unit: int, horizon: float, past_steps="auto",
              rel_var_tol: float = DEFAULT_REL_VAR_TOL) -> GridSpec:
    if past_steps == "auto":
        past_steps = past_horizon_for_tolerance(H, horizon, rel_var_tol, n_per_unit)
    return make_grid(n_per_unit, horizon, int(past_steps))
