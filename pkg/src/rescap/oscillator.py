"""Action-angle geometry of the soft Duffing well U(x) = x^2/2 - theta x^4/4.

Closed orbits 2U(x1) + x2^2 = r^2 exist for 0 < |r| < R_max = (2 theta)^(-1/2).
The angle chart follows the zero-crossing anchor: at phi = 0 the state is
(0, r) and X1 rises with phi.  Amplitude partials are taken by centered
finite differences; modulus-derivative chains for the Jacobi functions are
deliberately avoided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoResonanceError
from .specfun import EllipticModulus, ellint_K, jacobi_sn_cn_dn


@dataclass(frozen=True)
class ActionAngleState:
    r: float
    phi: float  # reduced mod 2*pi


@dataclass(frozen=True)
class AngleCoords:
    x1: float
    x2: float
    dx1_dphi: float
    dx2_dphi: float
    dx1_dr: float
    dx2_dr: float


# 5-point centered stencils; (weights, h-power, error order in h)
_STENCILS = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 1, 4),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, 2, 4),
    3: (np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0, 3, 2),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 4, 2),
}


def _stencil_derivative(f, x, order, h):
    w, hp, _ = _STENCILS[order]
    vals = [f(x + j * h) for j in (-2, -1, 0, 1, 2)]
    return sum(wi * vi for wi, vi in zip(w, vals)) / h**hp


def _richardson_derivative(f, x, order, h):
    _, _, p = _STENCILS[order]
    d1 = _stencil_derivative(f, x, order, h)
    d2 = _stencil_derivative(f, x, order, h / 2.0)
    return (2.0**p * d2 - d1) / (2.0**p - 1.0)


@dataclass(frozen=True)
class DuffingOscillator:
    theta: float

    def __post_init__(self):
        if self.theta <= 0:
            raise DomainError("quartic coefficient theta must be positive")

    @property
    def r_max(self) -> float:
        return (2.0 * self.theta) ** -0.5

    def potential(self, x):
        return x * x / 2.0 - self.theta * x**4 / 4.0

    def potential_prime(self, x):
        return x - self.theta * x**3

    def modulus_kr(self, r: float) -> EllipticModulus:
        """Root k in (0, 1] of (k + 1/k)^(-2) = theta r^2 / 2.

        Closed form through the quadratic in k + 1/k.
        """
        if r <= 0 or r > self.r_max * (1 + 1e-14):
            raise DomainError(f"orbit amplitude must lie in (0, {self.r_max}], got {r}")
        if r >= self.r_max * (1 - 1e-15):
            return EllipticModulus(1.0)
        s = math.sqrt(2.0 / (self.theta * r * r))
        k = (s - math.sqrt(s * s - 4.0)) / 2.0
        return EllipticModulus(min(k, 1.0))

    def frequency(self, r: float) -> tuple[float, float]:
        """(nu(r), nu'(r)); nu = 2 pi / (4 K(k_r) sqrt(k_r^2 + 1)).

        nu(0) = 1 (harmonic limit) and nu decreases to 0 at r_max.
        The derivative is a centered difference with step
        max(1e-6, 1e-8 r), shrunk near the domain ends.
        """
        nu = self._nu(r)
        if r == 0.0:
            return nu, 0.0
        h = max(1e-6, 1e-8 * r)
        if r - h <= 0 or r + h >= self.r_max:
            h = 0.49 * min(r, self.r_max - r)
        dnu = (self._nu(r + h) - self._nu(r - h)) / (2.0 * h)
        return nu, dnu

    def _nu(self, r: float) -> float:
        if r < 0 or r >= self.r_max:
            raise DomainError(f"frequency defined on [0, {self.r_max}), got {r}")
        if r == 0.0:
            return 1.0
        k = self.modulus_kr(r).k
        return 2.0 * math.pi / (4.0 * ellint_K(k) * math.sqrt(k * k + 1.0))

    def nu_derivative(self, r: float, order: int) -> float:
        """d^order nu / dr^order by 5-point stencils with Richardson."""
        if order == 0:
            return self._nu(r)
        h = (1e-3 if order <= 2 else 6e-3) * max(r, 1.0)
        h = min(h, 0.24 * (self.r_max - r), 0.24 * r)
        return _richardson_derivative(self._nu, r, order, h)

    def chart(self, phi, r: float):
        """(X1, X2) on the orbit of amplitude r, vectorized over phi."""
        k = self.modulus_kr(r).k
        fac = math.sqrt(k * k + 1.0)
        u = np.asarray(phi, dtype=float) / (self._nu(r) * fac)
        sn, cn, dn = jacobi_sn_cn_dn(u, k)
        return r * fac * sn, r * cn * dn

    def chart_dr(self, phi, r: float, order: int = 1, h: float | None = None):
        """Amplitude partials of (X1, X2) at fixed phi, vectorized over phi."""
        if h is None:
            h = (1e-4 if order == 1 else 1e-3) * max(r, 1.0)
        h = min(h, 0.2 * (self.r_max - r), 0.2 * r)
        w, hp, _ = _STENCILS[order]
        acc1 = acc2 = 0.0
        for wi, j in zip(w, (-2, -1, 0, 1, 2)):
            if wi == 0.0:
                continue
            x1, x2 = self.chart(phi, r + j * h)
            acc1 = acc1 + wi * x1
            acc2 = acc2 + wi * x2
        return acc1 / h**hp, acc2 / h**hp

    def angle_coords(self, phi: float, r: float) -> AngleCoords:
        """Chart point and partials; phi-partials from the flow identities
        nu dX1/dphi = X2 and nu dX2/dphi = -U'(X1)."""
        if r <= 0 or r >= self.r_max:
            raise DomainError(f"orbit amplitude must lie in (0, {self.r_max}), got {r}")
        x1, x2 = self.chart(phi, r)
        nu = self._nu(r)
        dx1_dr, dx2_dr = self.chart_dr(phi, r)
        return AngleCoords(
            x1=float(x1),
            x2=float(x2),
            dx1_dphi=float(x2) / nu,
            dx2_dphi=-self.potential_prime(float(x1)) / nu,
            dx1_dr=float(dx1_dr),
            dx2_dr=float(dx2_dr),
        )

    def resonant_amplitude(self, kappa: int, varkappa: int, s0: float) -> tuple[float, float]:
        """Solve kappa s0 = varkappa nu(r0) on the strictly decreasing branch.

        Returns (r0, eta) with eta = nu'(r0) < 0.
        """
        if kappa < 1 or varkappa < 1 or math.gcd(kappa, varkappa) != 1:
            raise DomainError("kappa, varkappa must be coprime positive integers")
        nu_star = kappa * s0 / varkappa
        if not 0.0 < nu_star < 1.0:
            raise NoResonanceError(f"target frequency {nu_star} outside (0, 1)")
        lo, hi = 1e-9 * self.r_max, self.r_max * (1.0 - 1e-12)
        if self._nu(hi) > nu_star or self._nu(lo) < nu_star:
            raise NoResonanceError(f"target frequency {nu_star} not bracketed on (0, r_max)")
        r0 = brentq(lambda r: self._nu(r) - nu_star, lo, hi, xtol=1e-14, rtol=8.9e-16)
        if abs(self._nu(r0) - nu_star) > 1e-12:
            raise NoResonanceError("bisection failed to meet the frequency tolerance")
        eta = self.frequency(r0)[1]
        if eta == 0.0:
            raise NoResonanceError("degenerate resonance: nu'(r0) = 0")
        return float(r0), float(eta)

    def action_angle_from_state(self, x1: float, x2: float) -> ActionAngleState:
        """Invert the chart: r from the energy, phi by bracketed root-finding
        on the quarter period selected by the signs of (x1, x2)."""
        energy = 2.0 * self.potential(x1) + x2 * x2
        if energy <= 0.0 or energy >= self.r_max**2:
            raise DomainError(f"state outside the well: 2U + x2^2 = {energy}")
        if abs(x1) > self.turning_point(math.sqrt(energy)):
            raise DomainError("state outside the well: |x1| beyond the turning point")
        r = math.sqrt(energy)
        if x1 >= 0.0 and x2 > 0.0:
            lo, hi = 0.0, math.pi / 2.0
        elif x1 > 0.0 and x2 <= 0.0:
            lo, hi = math.pi / 2.0, math.pi
        elif x1 <= 0.0 and x2 < 0.0:
            lo, hi = math.pi, 3.0 * math.pi / 2.0
        else:
            lo, hi = 3.0 * math.pi / 2.0, 2.0 * math.pi
        f = lambda p: float(self.chart(p, r)[0]) - x1
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            phi = lo
        elif fhi == 0.0:
            phi = hi
        elif flo * fhi > 0.0:
            # roundoff pushed the point a hair across a quadrant edge
            eps = 1e-9
            phi = brentq(f, max(lo - eps, 0.0), min(hi + eps, 2.0 * math.pi), xtol=1e-13)
        else:
            phi = brentq(f, lo, hi, xtol=1e-13)
        x2c = float(self.chart(phi, r)[1])
        if abs(x2c) > 1e-6 * r:
            phi -= (float(self.chart(phi, r)[0]) - x1) * self._nu(r) / x2c
        return ActionAngleState(r=r, phi=phi % (2.0 * math.pi))

    def turning_point(self, r: float) -> float:
        """Positive x with 2U(x) = r^2 (orbit extent): r sqrt(k^2+1)."""
        k = self.modulus_kr(r).k
        return r * math.sqrt(k * k + 1.0)
