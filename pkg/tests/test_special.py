import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special as sps

from fbmwalk.special import (
    DomainError,
    HurstIndex,
    ZETA_MARGIN,
    coefficient_K,
    fbm_constants,
    gamma_fn,
    scaling_constant_c,
    scaling_constant_c_integral,
    zeta,
    zeta_tail,
)

# Frozen oracle values.  Each was produced by the independent computation in
# the matching ``*_oracle`` helper below (direct summation or quadrature), not
# by the library.
ZETA_1_25 = 4.5951118258429435
ZETA_TAIL_1_25_FROM_100 = 1.2664954968965214
ZETA_1_6 = 2.2857656656801297
GAMMA_2_4 = 1.2421693445043047
C_0_7 = 1.091809130883742
C_0_3 = 0.7302829340799222


def summation_oracle(s, k0=1, n=10**7):
    """Sum of ``n`` terms from ``k0`` plus the midpoint-rule integral of the rest."""
    k = np.arange(k0, k0 + n, dtype=float)
    head = math.fsum(k[::-1] ** -s)
    end = k0 + n
    return head + (end - 0.5) ** (1 - s) / (s - 1)


def gamma_oracle(x):
    val, _ = integrate.quad(lambda t: t ** (x - 1) * math.exp(-t), 0, np.inf,
                            epsabs=0, epsrel=1e-13, limit=200)
    return val


def c_oracle(H):
    f = lambda u: ((1 + u) ** (H - 0.5) - u ** (H - 0.5)) ** 2
    i1, _ = integrate.quad(f, 0, 1, epsabs=1e-14, limit=500)
    i2, _ = integrate.quad(f, 1, np.inf, epsabs=1e-14, limit=500)
    return (i1 + i2 + 1 / (2 * H)) ** -0.5


@pytest.mark.slow
@pytest.mark.parametrize("args,frozen", [
    ((1.25,), ZETA_1_25),
    ((1.25, 100), ZETA_TAIL_1_25_FROM_100),
    ((1.6,), ZETA_1_6),
])
def test_frozen_values_match_summation_oracle(args, frozen):
    assert summation_oracle(*args) == pytest.approx(frozen, abs=1e-12)


def test_frozen_quadrature_values():
    assert gamma_oracle(2.4) == pytest.approx(GAMMA_2_4, rel=1e-12)
    assert c_oracle(0.7) == pytest.approx(C_0_7, rel=1e-10)
    assert c_oracle(0.3) == pytest.approx(C_0_3, rel=1e-10)


def test_zeta_two():
    assert abs(zeta(2.0) - math.pi ** 2 / 6) <= 1e-12


@pytest.mark.parametrize("s,expected", [(1.25, ZETA_1_25), (1.6, ZETA_1_6)])
def test_zeta_against_summation(s, expected):
    assert abs(zeta(s) - expected) <= 1e-12


def test_zeta_tail_examples():
    assert abs(zeta_tail(1.25, 100) - ZETA_TAIL_1_25_FROM_100) <= 1e-12
    assert abs(zeta_tail(2.0, 2) - (math.pi ** 2 / 6 - 1)) <= 1e-12
    assert zeta_tail(1.7, 1) == zeta(1.7)


def test_zeta_tail_vectorised_matches_scalar():
    ks = np.array([1, 5, 15, 16, 17, 1000, 10**6])
    out = zeta_tail(1.3, ks)
    assert out.shape == ks.shape
    for k, v in zip(ks, out):
        assert v == zeta_tail(1.3, int(k))


@settings(max_examples=60, deadline=None)
@given(s=st.floats(1.01, 6.0), k0=st.integers(1, 40))
def test_tail_plus_head_is_zeta(s, k0):
    head = math.fsum(n ** -s for n in range(1, k0))
    assert abs(zeta_tail(s, k0) + head - zeta(s)) <= 1e-11


@settings(max_examples=60, deadline=None)
@given(s=st.floats(1.001, 8.0), k0=st.integers(1, 10**5))
def test_tail_against_scipy_hurwitz(s, k0):
    assert zeta_tail(s, k0) == pytest.approx(sps.zeta(s, k0), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("s", [1.0, 0.5, -2.0, 1.0 + ZETA_MARGIN / 2])
def test_zeta_domain(s):
    with pytest.raises(DomainError):
        zeta(s)
    with pytest.raises(DomainError):
        zeta_tail(s, 3)


@pytest.mark.parametrize("k0", [0, -1, 2.5])
def test_zeta_tail_rejects_bad_start(k0):
    with pytest.raises(DomainError):
        zeta_tail(2.0, k0)


def test_gamma_examples():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-12)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert gamma_fn(2.4) == pytest.approx(GAMMA_2_4, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_gamma_domain(x):
    with pytest.raises(DomainError):
        gamma_fn(x)


def test_coefficient_K_examples():
    assert coefficient_K(0.5) == 1.0
    assert coefficient_K(0.75) == 1.0
    assert coefficient_K(0.25) == pytest.approx(0.25 * ZETA_1_25, rel=1e-12)
    assert coefficient_K(0.25) == pytest.approx(1.1488, abs=5e-5)


def test_coefficient_K_continuity_at_half():
    gaps = [abs(coefficient_K(0.5 - 10.0 ** -k) - 1.0) for k in range(2, 7)]
    assert gaps[0] < 0.1
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_coefficient_K_guard_band_routes_to_one():
    assert coefficient_K(0.5 - ZETA_MARGIN / 10) == 1.0


@pytest.mark.parametrize("H", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_constants_domain(H):
    with pytest.raises(DomainError):
        coefficient_K(H)
    with pytest.raises(DomainError):
        scaling_constant_c(H)


def test_scaling_constant_examples():
    assert scaling_constant_c(0.5) == pytest.approx(1.0, rel=1e-15)
    assert scaling_constant_c(0.7) == pytest.approx(C_0_7, rel=1e-10)
    assert scaling_constant_c(0.3) == pytest.approx(C_0_3, rel=1e-10)


@pytest.mark.parametrize("H", np.round(np.arange(0.05, 0.951, 0.05), 2))
def test_closed_form_matches_integral_form(H):
    c = scaling_constant_c(H)
    assert c > 0
    assert abs(c - scaling_constant_c_integral(H)) <= 1e-6


def test_hurst_regimes_and_constants_bundle():
    assert HurstIndex(0.3).regime == "sub-diffusive"
    assert HurstIndex(0.5).regime == "classical"
    assert HurstIndex(0.8).regime == "super-diffusive"
    fc = fbm_constants(0.25)
    assert fc.K_H == coefficient_K(0.25) and fc.c_H == scaling_constant_c(0.25)
