"""Time grid, the half-open grid-sum convention, and reproducible coin tosses.

Grid points are integers ``k`` internally (time ``k * dt``).  Coin tosses come
from a counter-based generator: the toss at grid index ``k`` is bit
``(k + 2**62) % 64`` of the SplitMix64 output for counter ``(k + 2**62) // 64``
under a key derived from the seed.  A toss is therefore a pure function of
``(seed, k)``, independent of how many points are generated or in what order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "GridError",
    "GridSpec",
    "make_grid",
    "BernoulliStream",
    "bernoulli_stream",
    "bernoulli_draws",
    "uniform_draws",
    "stream_key",
    "grid_sum_convention",
    "BERNOULLI_DOMAIN",
    "NORMAL_DOMAIN",
]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
COUNTER_OFFSET = 1 << 62

BERNOULLI_DOMAIN = 0x42455252_4E4F554C  # "BERRNOUL"
NORMAL_DOMAIN = 0x4741_5553_5349_414E  # "GAUSSIAN"


class GridError(ValueError):
    """Invalid grid construction or off-grid time."""


def _mix_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, domain: int = BERNOULLI_DOMAIN) -> int:
    """64-bit stream key for ``seed`` within a domain (coin tosses, normals)."""
    seed = int(seed)
    if not 0 <= seed <= _MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return _mix_int(_mix_int(seed ^ domain) ^ _GOLDEN)


def _words(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    # keys: (P,), counters: (W,) -> (P, W) uint64
    with np.errstate(over="ignore"):
        z = keys[:, None] + counters[None, :] * np.uint64(_GOLDEN)
        return _mix_array(z)


def bernoulli_draws(seeds, k_start: int, k_stop: int) -> np.ndarray:
    """Coin tosses in {-1, +1} for grid indices ``k_start <= k < k_stop``.

    Returns an int8 array of shape ``(len(seeds), k_stop - k_start)``.
    """
    seeds = np.atleast_1d(np.asarray(seeds, dtype=object))
    keys = np.array([stream_key(int(s)) for s in seeds], dtype=np.uint64)
    if k_stop <= k_start:
        return np.empty((len(keys), 0), dtype=np.int8)
    lo = k_start + COUNTER_OFFSET
    hi = k_stop + COUNTER_OFFSET
    c0, c1 = lo >> 6, ((hi - 1) >> 6) + 1
    counters = np.arange(c0, c1, dtype=np.uint64)
    words = _words(keys, counters)
    bits = (words[:, :, None] >> np.arange(64, dtype=np.uint64)) & np.uint64(1)
    bits = bits.reshape(len(keys), -1)[:, lo - (c0 << 6): hi - (c0 << 6)]
    return (2 * bits.astype(np.int8) - 1).astype(np.int8)


def uniform_draws(seeds, n: int, domain: int = NORMAL_DOMAIN) -> np.ndarray:
    """Open-interval uniforms on (0, 1), shape ``(len(seeds), n)``, counter-indexed."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=object))
    keys = np.array([stream_key(int(s), domain) for s in seeds], dtype=np.uint64)
    words = _words(keys, np.arange(1, n + 1, dtype=np.uint64))
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with step ``1/n_per_unit``.

    Simulated times are ``0, dt, ..., horizon``; coin tosses are needed at
    indices ``-past_horizon_steps <= k < n_steps``.
    """

    n_per_unit: int
    n_steps: int
    past_horizon_steps: int

    @property
    def dt(self) -> float:
        return 1.0 / self.n_per_unit

    @property
    def horizon(self) -> float:
        return self.n_steps / self.n_per_unit

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) / self.n_per_unit

    @property
    def first_index(self) -> int:
        return -self.past_horizon_steps

    @property
    def n_draws(self) -> int:
        return self.past_horizon_steps + self.n_steps

    def index_of(self, t: float) -> int:
        """Integer grid index of time ``t``; raises if ``t`` is off-grid."""
        x = float(t) * self.n_per_unit
        k = round(x)
        if abs(x - k) > 1e-9 * max(1.0, abs(x)):
            raise GridError(f"time {t!r} is not on the grid with dt=1/{self.n_per_unit}")
        return int(k)

    def with_past(self, past_horizon_steps: int) -> "GridSpec":
        return make_grid(self.n_per_unit, self.horizon, past_horizon_steps)


def make_grid(n_per_unit: int, horizon: float, past_horizon_steps: int) -> GridSpec:
    if isinstance(n_per_unit, bool) or int(n_per_unit) != n_per_unit or n_per_unit < 1:
        raise GridError(f"n_per_unit must be a positive integer, got {n_per_unit!r}")
    if isinstance(past_horizon_steps, bool) or int(past_horizon_steps) != past_horizon_steps \
            or past_horizon_steps < 1:
        raise GridError(f"past_horizon_steps must be a positive integer, got {past_horizon_steps!r}")
    if not horizon > 0 or not math.isfinite(horizon):
        raise GridError(f"horizon must be positive, got {horizon!r}")
    n_per_unit = int(n_per_unit)
    x = horizon * n_per_unit
    steps = round(x)
    if abs(x - steps) > 1e-9 * max(1.0, x):
        raise GridError(f"horizon {horizon!r} is not a multiple of dt=1/{n_per_unit}")
    return GridSpec(n_per_unit, int(steps), int(past_horizon_steps))


@dataclass(frozen=True, eq=False)
class BernoulliStream:
    """Coin tosses on a grid; ``draws[i]`` is the toss at index ``i - M``."""

    seed: int | None
    grid: GridSpec
    draws: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.shape != (self.grid.n_draws,):
            raise GridError(f"expected {self.grid.n_draws} draws, got shape {d.shape}")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)

    @classmethod
    def from_draws(cls, grid: GridSpec, draws, *, check: bool = True) -> "BernoulliStream":
        """Wrap explicit draws.

        With ``check=False`` any real values are accepted, which is useful for
        impulse-response and linearity checks of the linear path maps.
        """
        d = np.asarray(draws, dtype=float)
        if check and not np.all(np.abs(d) == 1.0):
            raise GridError("coin tosses must be +1 or -1")
        return cls(None, grid, d)

    @property
    def delta_b(self) -> np.ndarray:
        """Bernoulli increments ``sqrt(dt) * omega`` aligned with ``draws``."""
        return math.sqrt(self.grid.dt) * self.draws

    def omega(self, k: int) -> float:
        if not self.grid.first_index <= k < self.grid.n_steps:
            raise GridError(f"grid index {k} outside the stream")
        return float(self.draws[k + self.grid.past_horizon_steps])

    def delta_b_at(self, r: float) -> float:
        return math.sqrt(self.grid.dt) * self.omega(self.grid.index_of(r))

    def walk(self) -> np.ndarray:
        """Plain Bernoulli walk ``B_t`` at ``t = 0, dt, ..., horizon``."""
        inc = self.delta_b[self.grid.past_horizon_steps:]
        return np.concatenate(([0.0], np.cumsum(inc)))


def bernoulli_stream(seed: int, grid: GridSpec) -> BernoulliStream:
    draws = bernoulli_draws([seed], grid.first_index, grid.n_steps)[0]
    return BernoulliStream(int(seed), grid, draws)


def grid_sum_convention(f: Callable[[float], float], s: float, t: float, dt: float) -> float:
    """``f(s) + f(s + dt) + ... + f(t - dt)``: lower limit included, upper excluded."""
    if isinstance(dt, GridSpec):
        grid = dt
    else:
        n = round(1.0 / dt)
        if n < 1 or abs(n * dt - 1.0) > 1e-12:
            raise GridError(f"dt={dt!r} is not 1/N for a positive integer N")
        grid = GridSpec(n, 1, 1)
    ks, kt = grid.index_of(s), grid.index_of(t)
    if ks > kt:
        raise GridError(f"lower limit {s!r} exceeds upper limit {t!r}")
    step = grid.dt
    return math.fsum(f(k * step) for k in range(ks, kt))
