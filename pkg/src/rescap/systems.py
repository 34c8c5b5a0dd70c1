"""The pluggable perturbed-system abstraction and its two built-in instances.

`Example1System` is the planar oscillator with frequency nu(r) = 1 - theta r^2
driven through a power-log envelope; its expansion coefficients are exact
trigonometric polynomials with Laurent amplitude dependence.

`DuffingSystem` is the cubic well with decaying parametric pumping and noise;
it is simulated in Cartesian coordinates and analyzed in the action-angle
chart, where expansion coefficients are obtained by Fourier fits over the
angle and centered stencils in the amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .envelope import DecayEnvelope, PerturbationPhase, PowerEnvelope, PowerLogEnvelope
from .errors import DomainError, NoResonanceError, UnsupportedOrderError
from .oscillator import DuffingOscillator
from .trigpoly import TrigPoly

ESCAPE_OUTER = 0.98  # fraction of the amplitude bound treated as escaped
ESCAPE_INNER = 0.02


@dataclass(frozen=True)
class SeriesCoefficient:
    tag: str
    order: int
    value: TrigPoly


class PerturbedSystem:
    """Shared surface for drift/diffusion evaluation and series access.

    Instances are immutable after construction and safe to evaluate from
    many workers.  `state` is chart-dependent: (r, phi) for polar charts,
    (x1, x2) for Cartesian ones.
    """

    name: str
    chart: str
    n: int
    p: int
    kappa: int
    varkappa: int
    epsilon: float
    r0: float
    eta: float
    r_bound: float
    envelope: DecayEnvelope
    phase: PerturbationPhase

    def drift(self, state, t: float):
        raise NotImplementedError

    def diffusion(self, state, t: float):
        raise NotImplementedError

    def drift_orders(self) -> set[int]:
        raise NotImplementedError

    def diffusion_orders(self) -> set[int]:
        raise NotImplementedError

    def drift_coeff(self, component: int, order: int, r_deriv: int) -> TrigPoly:
        raise NotImplementedError

    def diffusion_coeff(self, row: int, col: int, order: int, r_deriv: int) -> TrigPoly:
        raise NotImplementedError

    def nu_derivative(self, k: int) -> float:
        raise NotImplementedError

    def amplitude_phase_drift(self, r: float, phi: float, S: float, t: float):
        """Full drift (including the frequency term) in amplitude-phase form,
        with the excitation phase supplied explicitly."""
        raise NotImplementedError

    def amplitude_phase_diffusion(self, r: float, phi: float, S: float, t: float):
        raise NotImplementedError

    def amplitude_phase(self, state) -> tuple[float, float]:
        raise NotImplementedError

    def state_from_amplitude_phase(self, r: float, phi: float):
        raise NotImplementedError

    def in_domain(self, state) -> bool:
        r = self.amplitude_phase(state)[0]
        return ESCAPE_INNER * self.r_bound < r < ESCAPE_OUTER * self.r_bound

    def series_coefficient(self, tag: str, k: int) -> SeriesCoefficient:
        """Expansion coefficient at mu-order k, evaluated on the resonant
        amplitude, as a function of the phase shift and S."""
        if tag == "a1":
            value = self.drift_coeff(1, k, 0)
        elif tag == "a2":
            value = self.drift_coeff(2, k, 0)
        elif tag in ("alpha11", "alpha21", "alpha12", "alpha22"):
            row, col = int(tag[5]), int(tag[6])
            value = self.diffusion_coeff(row, col, k, 0)
        else:
            raise DomainError(f"unknown series tag {tag!r}")
        return SeriesCoefficient(tag=tag, order=k, value=value)


def _s_poly(vk: int, c0: float, c1: float) -> TrigPoly:
    """c0 + c1 sin S as a TrigPoly."""
    return TrigPoly.const(c0, vk) + TrigPoly.sin_S(vk, 1, scale=c1)


class Example1System(PerturbedSystem):
    """Polar-chart oscillator with nu(r) = 1 - theta r^2, power-log decay.

    Drift orders: mu^2 carries the parametric forcing, mu^(2p) carries the
    noise-induced corrections (which are proportional to epsilon^2); the
    single noise column sits at mu^p.
    """

    name = "example1"
    chart = "polar"
    n = 2
    kappa = 1
    varkappa = 1

    def __init__(
        self,
        theta: float = 0.25,
        Q0: float = 0.0,
        Q1: float = 0.0,
        Z0: float = 0.0,
        Z1: float = 0.0,
        B0: float = 0.0,
        B1: float = 0.0,
        p: int = 1,
        epsilon: float = 0.0,
        s0: float = 0.5,
        s: tuple = (),
        tau0: float | None = None,
    ):
        if theta <= 0:
            raise DomainError("theta must be positive")
        if p < 1:
            raise DomainError("p must be a positive integer")
        if not 0.0 < s0 < 1.0:
            raise NoResonanceError(f"example1 resonates for s0 in (0, 1), got {s0}")
        self.theta = theta
        self.Q0, self.Q1, self.Z0, self.Z1 = Q0, Q1, Z0, Z1
        self.B0, self.B1 = B0, B1
        self.p = int(p)
        self.epsilon = float(epsilon)
        env = PowerLogEnvelope(q=2) if tau0 is None else PowerLogEnvelope(q=2, tau0=tau0)
        self.envelope = env
        self.phase = PerturbationPhase(s0=s0, envelope=env, s=tuple(s))
        self.r_bound = theta**-0.5
        self.r0 = math.sqrt((1.0 - s0) / theta)
        self.eta = -2.0 * theta * self.r0
        if abs(self.nu(self.r0) - s0) > 1e-10:
            raise DomainError("resonance condition violated: nu(r0) != s0")
        self.params = {
            "theta": theta, "Q0": Q0, "Q1": Q1, "Z0": Z0, "Z1": Z1,
            "B0": B0, "B1": B1,
        }

    def nu(self, r: float) -> float:
        return 1.0 - self.theta * r * r

    def nu_derivative(self, k: int) -> float:
        if k == 0:
            return self.nu(self.r0)
        if k == 1:
            return -2.0 * self.theta * self.r0
        if k == 2:
            return -2.0 * self.theta
        return 0.0

    def _QZB(self, S: float):
        s = math.sin(S)
        return self.Q0 + self.Q1 * s, self.Z0 + self.Z1 * s, self.B0 + self.B1 * s

    def amplitude_phase_drift(self, r, phi, S, t):
        mu = self.envelope.mu(t)
        Q, Z, B = self._QZB(S)
        sp, cp = math.sin(phi), math.cos(phi)
        mu2, mu2p = mu * mu, mu ** (2 * self.p)
        e2b2 = (self.epsilon * B) ** 2
        a1 = mu2 * (Q * r * sp - Z) * sp + mu2p * e2b2 * cp * cp / (2.0 * r)
        a2 = mu2 * (Q * r * sp - Z) * cp / r - mu2p * e2b2 * math.sin(2 * phi) / (2.0 * r * r)
        return np.array([a1, self.nu(r) + a2])

    def amplitude_phase_diffusion(self, r, phi, S, t):
        mu_p = self.envelope.mu(t) ** self.p
        B = self._QZB(S)[2]
        return np.array([[-mu_p * B * math.sin(phi), 0.0], [-mu_p * B * math.cos(phi) / r, 0.0]])

    def drift(self, state, t):
        return self.amplitude_phase_drift(state[0], state[1], self.phase.S(t), t)

    def diffusion(self, state, t):
        return self.amplitude_phase_diffusion(state[0], state[1], self.phase.S(t), t)

    def amplitude_phase(self, state):
        return float(state[0]), float(state[1])

    def state_from_amplitude_phase(self, r, phi):
        return np.array([r, phi])

    def drift_orders(self):
        return {2, 2 * self.p}

    def diffusion_orders(self):
        return {self.p}

    # exact Laurent-in-r expansion data: list of (power, TrigPoly) pairs
    def _radial_terms(self, component: int, order: int):
        vk = self.varkappa
        sin_phi = TrigPoly.angle_harmonic(vk, self.kappa, 1, -0.5j)
        cos_phi = TrigPoly.angle_harmonic(vk, self.kappa, 1, 0.5)
        Q = _s_poly(vk, self.Q0, self.Q1)
        Z = _s_poly(vk, self.Z0, self.Z1)
        B2 = _s_poly(vk, self.B0, self.B1) * _s_poly(vk, self.B0, self.B1) * self.epsilon**2
        terms = []
        if order == 2:
            if component == 1:
                terms += [(1, Q * sin_phi * sin_phi), (0, -1.0 * (Z * sin_phi))]
            else:
                terms += [(0, Q * sin_phi * cos_phi), (-1, -1.0 * (Z * cos_phi))]
        if order == 2 * self.p and self.epsilon != 0.0:
            if component == 1:
                terms += [(-1, B2 * cos_phi * cos_phi * 0.5)]
            else:
                terms += [(-2, -1.0 * (B2 * sin_phi * cos_phi))]
        return terms

    def drift_coeff(self, component, order, r_deriv):
        vk = self.varkappa
        out = TrigPoly.zero(vk)
        for power, tp in self._radial_terms(component, order):
            coef = 1.0
            for i in range(r_deriv):
                coef *= power - i
            if coef != 0.0:
                out = out + tp * (coef * self.r0 ** (power - r_deriv))
        return out

    def diffusion_coeff(self, row, col, order, r_deriv):
        vk = self.varkappa
        if col != 1 or order != self.p:
            return TrigPoly.zero(vk)
        B = _s_poly(vk, self.B0, self.B1)
        if row == 1:
            power, tp = 0, -1.0 * (B * TrigPoly.angle_harmonic(vk, self.kappa, 1, -0.5j))
        else:
            power, tp = -1, -1.0 * (B * TrigPoly.angle_harmonic(vk, self.kappa, 1, 0.5))
        coef = 1.0
        for i in range(r_deriv):
            coef *= power - i
        if coef == 0.0:
            return TrigPoly.zero(vk)
        return tp * (coef * self.r0 ** (power - r_deriv))


class DuffingSystem(PerturbedSystem):
    """Duffing well with decaying parametric pumping t^(-n/4) G(x1, x2, S)
    and noise t^(-p/4) B(S) dw on the velocity equation; S(t) = s0 t."""

    name = "duffing"

    def __init__(
        self,
        theta: float = 2.0**-5,
        P0: float = 0.0,
        P1: float = 0.0,
        Q0: float = 0.0,
        Q1: float = 0.0,
        B0: float = 0.0,
        B1: float = 0.0,
        n: int = 2,
        p: int = 1,
        epsilon: float = 0.0,
        kappa: int = 1,
        varkappa: int = 2,
        s0: float = 1.5,
        s: tuple = (),
        tau0: float = 100.0,
        chart: str = "cartesian",
        grid: int = 64,
    ):
        if n < 1 or p < 1:
            raise DomainError("n, p must be positive integers")
        if chart not in ("cartesian", "polar"):
            raise DomainError("chart must be cartesian or polar")
        self.theta = theta
        self.P0, self.P1, self.Q0, self.Q1 = P0, P1, Q0, Q1
        self.B0, self.B1 = B0, B1
        self.n, self.p = int(n), int(p)
        self.epsilon = float(epsilon)
        self.kappa, self.varkappa = int(kappa), int(varkappa)
        self.chart = chart
        self.grid = int(grid)
        self.oscillator = DuffingOscillator(theta)
        self.envelope = PowerEnvelope(q=4, tau0=tau0)
        self.phase = PerturbationPhase(s0=s0, envelope=self.envelope, s=tuple(s))
        self.r_bound = self.oscillator.r_max
        self.r0, self.eta = self.oscillator.resonant_amplitude(kappa, varkappa, s0)
        self._mode_cache: dict = {}
        self.params = {
            "theta": theta, "P0": P0, "P1": P1, "Q0": Q0, "Q1": Q1,
            "B0": B0, "B1": B1,
        }

    def _PQB(self, S: float):
        s = math.sin(S)
        return self.P0 + self.P1 * s, self.Q0 + self.Q1 * s, self.B0 + self.B1 * s

    def drift(self, state, t):
        if self.chart == "polar":
            return self._polar_drift(state, t)
        x1, x2 = state
        P, Q, _ = self._PQB(self.phase.S(t))
        g = t ** (-self.n / 4.0) * (P * x1 + Q * x2)
        return np.array([x2, -self.oscillator.potential_prime(x1) + g])

    def diffusion(self, state, t):
        if self.chart == "polar":
            return self._polar_diffusion(state, t)
        B = self._PQB(self.phase.S(t))[2]
        return np.array([[0.0, 0.0], [t ** (-self.p / 4.0) * B, 0.0]])

    def _polar_drift(self, state, t):
        return self.amplitude_phase_drift(state[0], state[1], self.phase.S(t), t)

    def amplitude_phase_drift(self, r, phi, S, t):
        P, Q, B = self._PQB(S)
        osc = self.oscillator
        x1, x2 = (float(v) for v in osc.chart(phi, r))
        dx1_dr = float(osc.chart_dr(phi, r)[0])
        nu = osc.nu_derivative(r, 0)
        g = P * x1 + Q * x2
        a1 = t ** (-self.n / 4.0) * x2 * g / r
        a2 = -t ** (-self.n / 4.0) * nu * dx1_dr * g / r
        if self.epsilon != 0.0:
            e2b2 = (self.epsilon * B) ** 2
            a1 += t ** (-self.p / 2.0) * e2b2 * osc.potential(x1) / r**3
            a2 += t ** (-self.p / 2.0) * e2b2 * 0.5 * float(self._angle_second_derivative(phi, r))
        return np.array([a1, nu + a2])

    def _angle_second_derivative(self, phi, r):
        """d^2 phi / d x2^2 along the inverse chart, vectorized over phi.

        Chain rule through (r, phi)(x1, x2) with the flow identities; the
        only finite differences are the amplitude partials of the chart.
        """
        osc = self.oscillator
        x2 = osc.chart(phi, r)[1]
        dx1, dx2 = osc.chart_dr(phi, r, 1)
        d2x1 = osc.chart_dr(phi, r, 2)[0]
        nu = osc.nu_derivative(r, 0)
        dnu = osc.nu_derivative(r, 1)
        return (
            -2.0 * dnu * x2 * dx1 / r**2
            - nu * x2 * d2x1 / r**2
            + nu * x2 * dx1 / r**3
            + nu * dx1 * dx2 / r**2
        )

    def _polar_diffusion(self, state, t):
        return self.amplitude_phase_diffusion(state[0], state[1], self.phase.S(t), t)

    def amplitude_phase_diffusion(self, r, phi, S, t):
        B = self._PQB(S)[2]
        osc = self.oscillator
        x2 = float(osc.chart(phi, r)[1])
        dx1_dr = float(osc.chart_dr(phi, r)[0])
        nu = osc.nu_derivative(r, 0)
        w = t ** (-self.p / 4.0)
        return np.array([[w * B * x2 / r, 0.0], [-w * B * nu * dx1_dr / r, 0.0]])

    def amplitude_phase(self, state):
        if self.chart == "polar":
            return float(state[0]), float(state[1])
        aa = self.oscillator.action_angle_from_state(float(state[0]), float(state[1]))
        return aa.r, aa.phi

    def state_from_amplitude_phase(self, r, phi):
        if self.chart == "polar":
            return np.array([r, phi])
        x1, x2 = self.oscillator.chart(phi, r)
        return np.array([float(x1), float(x2)])

    def in_domain(self, state):
        if self.chart == "polar":
            r = float(state[0])
        else:
            energy = 2.0 * self.oscillator.potential(float(state[0])) + float(state[1]) ** 2
            if energy <= 0.0 or energy >= self.r_bound**2:
                return False
            r = math.sqrt(energy)
        return ESCAPE_INNER * self.r_bound < r < ESCAPE_OUTER * self.r_bound

    def drift_orders(self):
        orders = {self.n}
        if self.epsilon != 0.0:
            orders.add(2 * self.p)
        return orders

    def diffusion_orders(self):
        return {self.p}

    def nu_derivative(self, k):
        return self.oscillator.nu_derivative(self.r0, k)

    # -- spectral fits -------------------------------------------------------

    # angle-profile names -> (S-factor builder, retained Fourier modes)
    def _profile_values(self, name: str, r: float) -> np.ndarray:
        key = (name, round(r, 12))
        if key in self._mode_cache:
            return self._mode_cache[key]
        osc = self.oscillator
        M = self.grid
        phi = 2.0 * np.pi * np.arange(M) / M
        x1, x2 = osc.chart(phi, r)
        if name in ("a1_P", "a1_Q", "e1", "d1"):
            if name == "a1_P":
                vals = x2 * x1 / r
            elif name == "a1_Q":
                vals = x2 * x2 / r
            elif name == "e1":
                vals = osc.potential(x1) / r**3
            else:
                vals = x2 / r
        else:
            dx1 = osc.chart_dr(phi, r)[0]
            nu = osc.nu_derivative(r, 0)
            if name == "a2_P":
                vals = -nu * dx1 * x1 / r
            elif name == "a2_Q":
                vals = -nu * dx1 * x2 / r
            elif name == "d2":
                vals = -nu * dx1 / r
            elif name == "e2":
                vals = 0.5 * self._angle_second_derivative(phi, r)
            else:
                raise DomainError(f"unknown profile {name!r}")
        self._mode_cache[key] = vals
        return vals

    def _profile_modes(self, name: str, r: float, cap: int) -> np.ndarray:
        vals = self._profile_values(name, r)
        c = np.fft.rfft(vals) / len(vals)
        total = float(np.sum(np.abs(c) ** 2))
        tail = float(np.sum(np.abs(c[cap + 1 :]) ** 2))
        if total > 0 and tail > 1e-10 * total:
            raise DomainError(f"Fourier tail of profile {name!r} above tolerance")
        return c[: cap + 1]

    def _profile_deriv_modes(self, name: str, r_deriv: int, cap: int) -> np.ndarray:
        """Centered 5-point stencil with one Richardson level, per mode."""
        if r_deriv == 0:
            return self._profile_modes(name, self.r0, cap)
        if r_deriv > 3:
            raise UnsupportedOrderError("amplitude Taylor depth implemented for derivatives <= 3")
        from .oscillator import _STENCILS

        w, hp, p_err = _STENCILS[r_deriv]

        def stencil(h):
            acc = np.zeros(cap + 1, dtype=complex)
            for wi, j in zip(w, (-2, -1, 0, 1, 2)):
                if wi == 0.0:
                    continue
                acc += wi * self._profile_modes(name, self.r0 + j * h, cap)
            return acc / h**hp

        h = 1e-3 * self.r0
        d1, d2 = stencil(h), stencil(h / 2.0)
        return (2.0**p_err * d2 - d1) / (2.0**p_err - 1.0)

    def _angle_tp(self, modes: np.ndarray) -> TrigPoly:
        vk = self.varkappa
        out = TrigPoly.const(float(modes[0].real), vk)
        for j in range(1, len(modes)):
            if modes[j] != 0.0:
                out = out + TrigPoly.angle_harmonic(vk, self.kappa, j, complex(modes[j]))
        return out

    def drift_coeff(self, component, order, r_deriv):
        vk = self.varkappa
        out = TrigPoly.zero(vk)
        gcap, ecap = 14, 12
        if order == self.n:
            P = _s_poly(vk, self.P0, self.P1)
            Q = _s_poly(vk, self.Q0, self.Q1)
            pre = "a1" if component == 1 else "a2"
            out = out + P * self._angle_tp(self._profile_deriv_modes(f"{pre}_P", r_deriv, gcap))
            out = out + Q * self._angle_tp(self._profile_deriv_modes(f"{pre}_Q", r_deriv, gcap))
        if order == 2 * self.p and self.epsilon != 0.0:
            B2 = _s_poly(vk, self.B0, self.B1) * _s_poly(vk, self.B0, self.B1) * self.epsilon**2
            name = "e1" if component == 1 else "e2"
            out = out + B2 * self._angle_tp(self._profile_deriv_modes(name, r_deriv, ecap))
        return out

    def diffusion_coeff(self, row, col, order, r_deriv):
        vk = self.varkappa
        if col != 1 or order != self.p:
            return TrigPoly.zero(vk)
        B = _s_poly(vk, self.B0, self.B1)
        name = "d1" if row == 1 else "d2"
        return B * self._angle_tp(self._profile_deriv_modes(name, r_deriv, 14))


_SYSTEM_PARAM_KEYS = {
    "example1": {"theta", "Q0", "Q1", "Z0", "Z1", "B0", "B1"},
    "duffing": {"theta", "P0", "P1", "Q0", "Q1", "B0", "B1"},
}


def make_system(
    name: str,
    params: dict | None = None,
    n: int = 2,
    p: int = 1,
    kappa: int = 1,
    varkappa: int = 1,
    epsilon: float = 0.0,
    s0: float | None = None,
    s: tuple = (),
    tau0: float | None = None,
) -> PerturbedSystem:
    """Construct a built-in system from flat configuration values."""
    params = dict(params or {})
    unknown = set(params) - _SYSTEM_PARAM_KEYS.get(name, set())
    if unknown:
        raise DomainError(f"unknown parameters for {name}: {sorted(unknown)}")
    if name == "example1":
        if (kappa, varkappa) != (1, 1):
            raise DomainError("example1 is a 1:1 resonance (kappa = varkappa = 1)")
        return Example1System(
            p=p, epsilon=epsilon, s0=0.5 if s0 is None else s0,
            s=s, tau0=tau0, **params,
        )
    if name == "duffing":
        kwargs = dict(params)
        if tau0 is not None:
            kwargs["tau0"] = tau0
        return DuffingSystem(
            n=n, p=p, kappa=kappa, varkappa=varkappa,
            epsilon=epsilon, s0=1.5 if s0 is None else s0, s=s, **kwargs,
        )
    raise DomainError(f"unknown system {name!r}")
