import math

import numpy as np
import pytest

from rescap.errors import DomainError
from rescap.specfun import EllipticModulus, ellint_K, jacobi_sn_cn_dn

# Independent oracle: adaptive quadrature of the defining integral
# int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta) at k = 0.5
# (scipy.integrate.quad, epsrel 1e-15; cross-checked against mpmath).
K_HALF = 1.6857503548125963


def test_K_at_zero():
    assert ellint_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)


def test_K_half_quadrature_oracle():
    assert ellint_K(0.5) == pytest.approx(K_HALF, rel=1e-13)


def test_K_monotone_increasing():
    ks = np.linspace(0.0, 0.999, 40)
    vals = [ellint_K(k) for k in ks]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_K_domain_errors():
    with pytest.raises(DomainError):
        ellint_K(1.0)
    with pytest.raises(DomainError):
        ellint_K(1.5)
    with pytest.raises(DomainError):
        ellint_K(-0.1)


def test_modulus_type():
    m = EllipticModulus(0.6)
    assert m.k == 0.6
    assert m.k**2 + m.complement**2 == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        EllipticModulus(1.2)
    assert ellint_K(EllipticModulus(0.5)) == pytest.approx(K_HALF, rel=1e-13)


def test_jacobi_at_origin():
    for k in (0.0, 0.3, 0.9, 1.0):
        sn, cn, dn = jacobi_sn_cn_dn(0.0, k)
        assert (sn, cn, dn) == (0.0, 1.0, 1.0)


def test_jacobi_circular_limit():
    u = np.linspace(-5.0, 5.0, 41)
    sn, cn, dn = jacobi_sn_cn_dn(u, 0.0)
    assert np.allclose(sn, np.sin(u), atol=1e-14)
    assert np.allclose(cn, np.cos(u), atol=1e-14)
    assert np.allclose(dn, 1.0, atol=1e-14)


def test_jacobi_hyperbolic_limit():
    u = np.linspace(-3.0, 3.0, 31)
    sn, cn, dn = jacobi_sn_cn_dn(u, 1.0)
    assert np.allclose(sn, np.tanh(u), atol=1e-14)
    assert np.allclose(cn, 1.0 / np.cosh(u), atol=1e-14)
    assert np.allclose(dn, cn, atol=1e-14)


@pytest.mark.parametrize("k", [0.0, 0.1, 0.35, 0.627, 0.85, 0.99, 0.999])
def test_identities_on_grid(k):
    K = ellint_K(k) if k < 1 else math.pi / 2
    u = np.linspace(-4 * K, 4 * K, 113)
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    assert np.max(np.abs(sn**2 + cn**2 - 1.0)) <= 1e-12
    assert np.max(np.abs(dn**2 + k**2 * sn**2 - 1.0)) <= 1e-12


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9, 0.999])
def test_periodicity_4K(k):
    K = ellint_K(k)
    u = np.linspace(-4 * K, 4 * K, 57)
    sn0 = jacobi_sn_cn_dn(u, k)[0]
    sn1 = jacobi_sn_cn_dn(u + 4 * K, k)[0]
    assert np.max(np.abs(sn1 - sn0)) <= 1e-10


@pytest.mark.parametrize("k", [0.05, 0.4, 0.8, 0.99])
def test_sn_at_quarter_period(k):
    K = ellint_K(k)
    sn, _, _ = jacobi_sn_cn_dn(K, k)
    assert abs(sn - 1.0) <= 1e-10


def test_parity():
    u = np.linspace(0.1, 7.0, 29)
    for k in (0.2, 0.7, 0.95):
        sp, cp, dp = jacobi_sn_cn_dn(u, k)
        sm, cm, dm = jacobi_sn_cn_dn(-u, k)
        assert np.allclose(sm, -sp, atol=1e-13)
        assert np.allclose(cm, cp, atol=1e-13)
        assert np.allclose(dm, dp, atol=1e-13)


def test_jacobi_rejects_nonfinite():
    with pytest.raises(DomainError):
        jacobi_sn_cn_dn(float("nan"), 0.5)


# Frozen reference triples (mpmath ellipfun, 17 digits), including the
# quarter-period point where naive dn formulas lose accuracy.
_REFERENCE = [
    (0.35, 0.8, (0.7109331112691506, 0.70325963292454474, 0.96854805179422709)),
    (0.627, 2.3, (0.91391201470424888, -0.40591234198927828, 0.81953940271900516)),
    (0.95, 5.1, (0.079860372447646086, -0.99680605982935477, 0.99711791911666703)),
    (0.999, 1.2, (0.83388823952629776, 0.55193333291234725, 0.55319114942502146)),
]


@pytest.mark.parametrize("k,u,expected", _REFERENCE)
def test_jacobi_against_frozen_reference(k, u, expected):
    got = jacobi_sn_cn_dn(u, k)
    for g, e in zip(got, expected):
        assert g == pytest.approx(e, abs=1e-12)


def test_dn_at_quarter_period_equals_complement():
    for k in (0.2, 0.627, 0.95):
        K = ellint_K(k)
        dn = jacobi_sn_cn_dn(K, k)[2]
        assert dn == pytest.approx(math.sqrt(1 - k * k), abs=1e-12)
