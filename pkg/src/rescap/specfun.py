"""Jacobi elliptic functions and the complete elliptic integral K.

Everything is written against the modulus k (not the parameter m = k^2).
K(k) comes from the arithmetic-geometric mean; sn/cn/dn from the
descending Landen recursion seeded by the same AGM chain (DLMF 22.20).
Near the degenerate moduli the circular/hyperbolic closed forms are used
directly so accuracy stays uniform in k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_DEGENERATE_TOL = 1e-12
_MAX_AGM_ITER = 64


@dataclass(frozen=True)
class EllipticModulus:
    """Modulus k in [0, 1]; complementary modulus k' = sqrt(1 - k^2)."""

    k: float

    def __post_init__(self):
        if not np.isfinite(self.k) or self.k < 0.0 or self.k > 1.0:
            raise DomainError(f"elliptic modulus must lie in [0, 1], got {self.k}")

    @property
    def complement(self) -> float:
        return float(np.sqrt((1.0 - self.k) * (1.0 + self.k)))


def _as_modulus(k) -> float:
    if isinstance(k, EllipticModulus):
        return k.k
    k = float(k)
    if not np.isfinite(k) or k < 0.0 or k > 1.0:
        raise DomainError(f"elliptic modulus must lie in [0, 1], got {k}")
    return k


def _agm_chain(k: float):
    """AGM sequence a_n with Landen moduli c_n, starting at (1, k')."""
    kp = float(np.sqrt((1.0 - k) * (1.0 + k)))
    a, b = 1.0, kp
    a_chain, c_chain = [1.0], [k]
    while abs(c_chain[-1]) > np.finfo(float).eps * a_chain[-1]:
        a, b = 0.5 * (a + b), float(np.sqrt(a * b))
        c_chain.append(a_chain[-1] - a)
        a_chain.append(a)
        if len(a_chain) > _MAX_AGM_ITER:
            break
    return a_chain, c_chain


def ellint_K(k) -> float:
    """Complete elliptic integral of the first kind, K(k).

    AGM iteration: a <- (a+b)/2, b <- sqrt(ab) starting from (1, k').
    Quadratically convergent; terminates when the means agree to
    machine precision. K(0) = pi/2; diverges as k -> 1.
    """
    k = _as_modulus(k)
    if k >= 1.0:
        raise DomainError("K(k) diverges at k = 1")
    a_chain, _ = _agm_chain(k)
    return float(np.pi / (2.0 * a_chain[-1]))


def jacobi_sn_cn_dn(u, k):
    """Jacobi sn, cn, dn at argument u and modulus k.

    Accepts scalar or ndarray u; returns a triple matching its shape.
    Descending Landen transformation: with the AGM chain a_n, c_n set
    phi_N = 2^N a_N u and descend through
    phi_{n-1} = (phi_n + arcsin((c_n/a_n) sin phi_n)) / 2,
    then sn = sin phi_0, cn = cos phi_0, dn = cos phi_0 / cos(phi_1 - phi_0).
    """
    k = _as_modulus(k)
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError("non-finite argument to jacobi_sn_cn_dn")
    scalar = u.ndim == 0

    if k < _DEGENERATE_TOL:
        sn, cn, dn = np.sin(u), np.cos(u), np.ones_like(u)
    elif 1.0 - k < _DEGENERATE_TOL:
        sn, cn = np.tanh(u), 1.0 / np.cosh(u)
        dn = np.array(cn, copy=True)
    else:
        a_chain, c_chain = _agm_chain(k)
        n = len(a_chain) - 1
        phi = (2.0**n) * a_chain[n] * u
        for i in range(n, 0, -1):
            s = np.clip(c_chain[i] / a_chain[i] * np.sin(phi), -1.0, 1.0)
            phi = 0.5 * (phi + np.arcsin(s))
        sn = np.sin(phi)
        cn = np.cos(phi)
        # dn >= k' > 0 for real u, so the defining identity gives it without
        # the 0/0 of the amplitude-ratio formula at odd multiples of K
        dn = np.sqrt((1.0 - k * sn) * (1.0 + k * sn))

    if scalar:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn
