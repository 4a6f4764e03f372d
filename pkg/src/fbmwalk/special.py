"""Special functions used by the walk: Riemann zeta, zeta tails, gamma, and
the two Hurst-dependent constants (the weight-balancing constant ``K`` and the
Mandelbrot-Van Ness scaling constant ``c``).

Zeta tails ``sum_{n>=k0} n**-s`` are evaluated by Euler-Maclaurin summation;
the remainder after eight Bernoulli corrections at a cut-off of 16 is far
below double precision for the exponents used here (1 < s <= 3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import bernoulli

__all__ = [
    "DomainError",
    "HurstIndex",
    "as_hurst",
    "zeta",
    "zeta_tail",
    "gamma_fn",
    "coefficient_K",
    "scaling_constant_c",
    "scaling_constant_c_integral",
    "FbmConstants",
    "fbm_constants",
    "ZETA_MARGIN",
]

#: Smallest admissible distance of the zeta argument from the pole at 1.
ZETA_MARGIN = 1e-6

_EM_CUTOFF = 16
_EM_TERMS = 8
# B_2, B_4, ..., B_16 divided by (2k)!
_EM_COEFFS = np.array(
    [bernoulli(2 * k)[2 * k] / math.factorial(2 * k) for k in range(1, _EM_TERMS + 1)]
)


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


@dataclass(frozen=True)
class HurstIndex:
    """A validated Hurst index ``0 < H < 1``."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (0.0 < v < 1.0) or math.isnan(v):
            raise DomainError(f"Hurst index must lie in (0, 1), got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def regime(self) -> str:
        if self.value < 0.5:
            return "sub-diffusive"
        if self.value > 0.5:
            return "super-diffusive"
        return "classical"

    @property
    def exponent(self) -> float:
        """``H - 1/2``, the exponent of the moving-average kernel."""
        return self.value - 0.5

    @property
    def uses_zeta_branch(self) -> bool:
        """True when ``K`` is the zeta-balanced constant rather than 1."""
        return self.value < 0.5 - ZETA_MARGIN

    def __float__(self) -> float:
        return self.value


def as_hurst(H) -> HurstIndex:
    return H if isinstance(H, HurstIndex) else HurstIndex(H)


def _check_s(s: float, margin: float) -> float:
    s = float(s)
    if not s >= 1.0 + margin:
        raise DomainError(f"zeta series diverges for s={s!r} (need s >= 1 + {margin:g})")
    return s


def _em_tail(s: float, a: np.ndarray) -> np.ndarray:
    # sum_{n>=a} n**-s for a >= _EM_CUTOFF
    a = np.asarray(a, dtype=float)
    out = a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
    rising = s  # (s)_{2k-1}
    power = a ** (-s - 1.0)
    inv_a2 = 1.0 / (a * a)
    for k, coeff in enumerate(_EM_COEFFS, start=1):
        out = out + coeff * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power = power * inv_a2
    return out


def zeta_tail(s: float, k0, *, margin: float = ZETA_MARGIN):
    """Return ``sum_{n=k0}^inf n**-s``.

    ``k0`` may be an integer or an integer array (evaluated elementwise).
    """
    s = _check_s(s, margin)
    k = np.asarray(k0)
    if k.size and (np.any(np.mod(k, 1) != 0) or np.min(k) < 1):
        raise DomainError("tail start k0 must be a positive integer")
    k = k.astype(np.int64)
    a = np.maximum(k, _EM_CUTOFF)
    head_terms = np.arange(1, _EM_CUTOFF, dtype=float) ** (-s)
    # prefix[m] = sum_{n=1}^{m-1} n**-s for m <= _EM_CUTOFF
    prefix = np.concatenate(([0.0, 0.0], np.cumsum(head_terms)))
    head = prefix[np.minimum(a, _EM_CUTOFF)] - prefix[np.minimum(k, _EM_CUTOFF)]
    out = head + _em_tail(s, a)
    if np.ndim(k0) == 0:
        return float(out)
    return out


def zeta(s: float, *, margin: float = ZETA_MARGIN) -> float:
    """Riemann zeta function for real ``s > 1``."""
    return zeta_tail(s, 1, margin=margin)


def gamma_fn(x: float) -> float:
    """Gamma function on the positive reals."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_fn is only defined here for x > 0, got {x!r}")
    return math.gamma(x)


def coefficient_K(H) -> float:
    """Weight on the current coin toss, relative to ``dt**(H - 1/2)``.

    Equals 1 for ``H >= 1/2`` and ``-(H - 1/2) * zeta(3/2 - H)`` below, where it
    cancels the divergent part of the history weights.  Hurst indices within
    ``ZETA_MARGIN`` below 1/2 take the value 1.
    """
    h = as_hurst(H)
    if h.uses_zeta_branch:
        return -h.exponent * zeta(1.5 - h.value)
    return 1.0


def scaling_constant_c(H) -> float:
    h = as_hurst(H).value
    return math.sqrt(gamma_fn(2 * h + 1) * math.sin(math.pi * h)) / gamma_fn(h + 0.5)


def scaling_constant_c_integral(H) -> float:
    """Scaling constant from its defining integral (quadrature; slow)."""
    h = as_hurst(H)
    a = h.exponent

    def integrand(u):
        if u == 0.0:
            return 1.0 if a > 0 else math.inf
        # (1+u)**a - u**a without cancellation at large u
        return (u ** a * math.expm1(a * math.log1p(1.0 / u))) ** 2

    # u**(2a) is integrable but singular at 0 when a < 0; the tail decays like u**(2a-2)
    head, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=500)
    tail, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)
    return (head + tail + 1.0 / (2.0 * h.value)) ** -0.5


@dataclass(frozen=True)
class FbmConstants:
    H: HurstIndex
    K_H: float
    c_H: float


def fbm_constants(H) -> FbmConstants:
    h = as_hurst(H)
    return FbmConstants(h, coefficient_K(h), scaling_constant_c(h))
