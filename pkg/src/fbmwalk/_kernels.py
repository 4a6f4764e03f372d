"""Compiled inner loops.

``linear_functionals`` evaluates ``sum_k coef[j, k] * omega_p(k)`` for many
paths ``p`` at once, regenerating each coin toss from its counter instead of
materialising the draws.  Coin tosses are consumed a 64-bit word at a time;
for each word a lookup table holds, per byte value, the signed partial sum of
the eight coefficients it covers, so one path costs eight table reads per word
and functional.  The per-path summation order does not depend on the number of
threads, so results are bit-identical across thread counts.
"""
from __future__ import annotations

import os

import numba as nb
import numpy as np

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # skip probing an outdated TBB (it only emits a warning) when OpenMP is present
    nb.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def configure_threads() -> int:
    """Apply the ``FBMWALK_THREADS`` cap to numba's worker pool."""
    cap = os.environ.get("FBMWALK_THREADS")
    n = nb.config.NUMBA_NUM_THREADS
    if cap:
        n = max(1, min(n, int(cap)))
    nb.set_num_threads(n)
    return n


@nb.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def _fill_tables(coef, base, tab):
    J = coef.shape[0]
    for b in range(8):
        off = base + 8 * b
        for j in range(J):
            s = 0.0
            for i in range(8):
                s -= coef[j, off + i]
            tab[b, 0, j] = s
        for v in range(1, 256):
            low = v & (-v)
            i = 0
            while (low >> i) != 1:
                i += 1
            prev = v ^ low
            for j in range(J):
                tab[b, v, j] = tab[b, prev, j] + 2.0 * coef[j, off + i]


@nb.njit(parallel=True, cache=True)
def linear_functionals(keys, coef, counter0, n_chunks):
    """``out[p, j] = sum_c coef[j, c] * omega_p(c)`` with tosses from counters.

    ``coef`` has a multiple of 64 columns; column ``c`` is bit ``c % 64`` of the
    word at counter ``counter0 + c // 64``.
    """
    P = keys.shape[0]
    J = coef.shape[0]
    W = coef.shape[1] // 64
    out = np.zeros((P, J))
    chunk = (P + n_chunks - 1) // n_chunks
    for ci in nb.prange(n_chunks):
        lo = ci * chunk
        hi = min(P, lo + chunk)
        if lo >= hi:
            continue
        tab = np.empty((8, 256, J))
        for w in range(W):
            _fill_tables(coef, 64 * w, tab)
            step = (counter0 + np.uint64(w)) * _GOLDEN
            for p in range(lo, hi):
                word = _mix(keys[p] + step)
                for b in range(8):
                    v = (word >> np.uint64(8 * b)) & np.uint64(255)
                    for j in range(J):
                        out[p, j] += tab[b, v, j]
    return out
