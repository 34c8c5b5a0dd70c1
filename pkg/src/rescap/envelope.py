"""Decay envelopes mu(t), their exponents, the integrals zeta_h, and the
perturbation phase S(t).

Two built-in families:

* power:      mu = t^(-1/q),       ell = -1/(q t),            (m, chi_m) = (q, -1/q)
* power-log:  mu = t^(-1/q) log t, ell = -(1 - q/log t)/(q t), (m, chi_m) = (q, 0)

A user-supplied envelope can be wrapped in `CustomEnvelope`; its declared
exponents are checked numerically at large probe times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from scipy.integrate import quad

from .errors import DomainError


class ZetaResult(NamedTuple):
    value: float
    divergent: bool  # True when mu^(h/2) is not integrable on (t0, inf)


class DecayEnvelope:
    """Base interface: mu(t), ell(t) = mu'/mu, exponents, zeta integrals."""

    tau0: float

    def mu(self, t: float) -> float:
        raise NotImplementedError

    def ell(self, t: float) -> float:
        raise NotImplementedError

    def exponents(self) -> tuple[int, float]:
        """(m, chi_m) with ell/mu^m -> chi_m and mu^(m+1)/ell -> 0."""
        raise NotImplementedError

    def _check_domain(self, t: float):
        if t < self.tau0:
            raise DomainError(f"t = {t} below envelope reference time {self.tau0}")

    def zeta_divergent(self, h: int) -> bool:
        raise NotImplementedError

    def zeta(self, h: int, t0: float, t: float) -> ZetaResult:
        """Integral of mu^(h/2) over [t0, t], plus the divergence flag."""
        if t0 < self.tau0:
            raise DomainError(f"t0 = {t0} below envelope reference time {self.tau0}")
        if t < t0:
            raise DomainError(f"zeta needs t >= t0, got t = {t} < t0 = {t0}")
        return ZetaResult(self._zeta_value(h, t0, t), self.zeta_divergent(h))

    def _zeta_value(self, h: int, t0: float, t: float) -> float:
        raise NotImplementedError

    def verify_conditions(self, probes=(1e6, 1e8)) -> bool:
        """Probe the two exponent limits at large times.

        The second ratio converges only logarithmically for the power-log
        family, so the check asserts approach (strict decrease between the
        probes) rather than closeness: |ell/mu^m - chi_m| and |mu^(m+1)/ell|
        must both shrink, or already be negligible.
        """
        m, chi_m = self.exponents()
        r1 = [abs(self.ell(t) / self.mu(t) ** m - chi_m) for t in probes]
        r2 = [abs(self.mu(t) ** (m + 1) / self.ell(t)) for t in probes]
        ok = r1[-1] <= max(0.95 * r1[0], 1e-9 * max(1.0, abs(chi_m)))
        ok &= r2[-1] <= max(0.95 * r2[0], 1e-3)
        return bool(ok)


@dataclass(frozen=True)
class PowerEnvelope(DecayEnvelope):
    q: int
    tau0: float = 1.0

    def __post_init__(self):
        if self.q < 1 or int(self.q) != self.q:
            raise DomainError("power envelope needs a positive integer q")
        if self.tau0 <= 0:
            raise DomainError("tau0 must be positive")

    def mu(self, t):
        self._check_domain(t)
        return t ** (-1.0 / self.q)

    def ell(self, t):
        self._check_domain(t)
        return -1.0 / (self.q * t)

    def exponents(self):
        return self.q, -1.0 / self.q

    def zeta_divergent(self, h):
        return h / (2.0 * self.q) <= 1.0

    def _zeta_value(self, h, t0, t):
        a = h / (2.0 * self.q)
        if abs(a - 1.0) < 1e-15:
            return math.log(t / t0)
        return (t ** (1.0 - a) - t0 ** (1.0 - a)) / (1.0 - a)


@dataclass(frozen=True)
class PowerLogEnvelope(DecayEnvelope):
    """mu = t^(-1/q) log t; requires tau0 >= e^q + 1 so mu is strictly decreasing."""

    q: int
    tau0: float = 0.0

    def __post_init__(self):
        if self.q < 1 or int(self.q) != self.q:
            raise DomainError("power-log envelope needs a positive integer q")
        floor = math.exp(self.q) + 1.0
        if self.tau0 == 0.0:
            object.__setattr__(self, "tau0", floor)
        elif self.tau0 < floor:
            raise DomainError(f"power-log envelope needs tau0 >= e^q + 1 = {floor:.4f}")

    def mu(self, t):
        self._check_domain(t)
        return t ** (-1.0 / self.q) * math.log(t)

    def ell(self, t):
        self._check_domain(t)
        return -(1.0 - self.q / math.log(t)) / (self.q * t)

    def exponents(self):
        return self.q, 0.0

    def zeta_divergent(self, h):
        return h / (2.0 * self.q) <= 1.0

    def _zeta_value(self, h, t0, t):
        if h == 0:
            return t - t0
        a = h / (2.0 * self.q)
        b = h / 2.0
        # substitute s = log(varsigma): integral of exp((1-a) s) s^b ds
        f = lambda s: math.exp((1.0 - a) * s) * s**b
        val, _ = quad(f, math.log(t0), math.log(t), epsabs=0.0, epsrel=1e-12, limit=400)
        return val


@dataclass(frozen=True)
class CustomEnvelope(DecayEnvelope):
    """User-supplied (mu, ell, m, chi_m); exponent limits verified at probes."""

    mu_fn: Callable[[float], float]
    ell_fn: Callable[[float], float]
    m: int
    chi_m: float
    tau0: float = 1.0
    verify: bool = True

    def __post_init__(self):
        if self.chi_m > 0:
            raise DomainError("chi_m must be <= 0")
        if self.verify and not self.verify_conditions():
            raise DomainError("declared envelope exponents fail the limit probes")

    def mu(self, t):
        self._check_domain(t)
        return self.mu_fn(t)

    def ell(self, t):
        self._check_domain(t)
        return self.ell_fn(t)

    def exponents(self):
        return self.m, self.chi_m

    def zeta_divergent(self, h):
        # probe the tail: integrable iff t * mu^(h/2) -> 0 fast enough;
        # decided by comparing decades far out
        i1 = self._zeta_value(h, 1e8, 1e10)
        i2 = self._zeta_value(h, 1e10, 1e12)
        return not (i2 < 0.5 * i1)

    def _zeta_value(self, h, t0, t):
        f = lambda s: math.exp(s) * self.mu_fn(math.exp(s)) ** (h / 2.0)
        val, _ = quad(f, math.log(t0), math.log(t), epsabs=0.0, epsrel=1e-10, limit=400)
        return val


def envelope_eval(env: DecayEnvelope, t: float) -> tuple[float, float]:
    """(mu(t), ell(t)); domain error below the reference time."""
    return env.mu(t), env.ell(t)


def mu_exponents(env: DecayEnvelope) -> tuple[int, float]:
    return env.exponents()


def zeta(env: DecayEnvelope, h: int, t0: float, t: float) -> ZetaResult:
    if h < 0:
        raise DomainError("zeta needs h >= 0")
    return env.zeta(h, t0, t)


@dataclass(frozen=True)
class PerturbationPhase:
    """S(t) = s0 t + sum_k s_k * integral of mu^k from t0."""

    s0: float
    envelope: DecayEnvelope
    s: tuple[float, ...] = field(default_factory=tuple)
    t0: float = 0.0

    def __post_init__(self):
        if self.s0 == 0.0:
            raise DomainError("phase slope s0 must be nonzero")
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))
        if self.t0 == 0.0:
            object.__setattr__(self, "t0", self.envelope.tau0)

    def s_coeff(self, k: int) -> float:
        """s_k, defined as 0 beyond the stored list."""
        if k < 1 or k > len(self.s):
            return 0.0
        return self.s[k - 1]

    def S(self, t: float) -> float:
        if t < self.t0:
            raise DomainError(f"phase defined for t >= {self.t0}, got {t}")
        val = self.s0 * t
        for k, sk in enumerate(self.s, start=1):
            if sk != 0.0:
                val += sk * self.envelope.zeta(2 * k, self.t0, t).value
        return val

    def S_prime(self, t: float) -> float:
        val = self.s0
        for k, sk in enumerate(self.s, start=1):
            if sk != 0.0:
                val += sk * self.envelope.mu(t) ** k
        return val


def phase_S(ph: PerturbationPhase, t: float) -> float:
    return ph.S(t)
