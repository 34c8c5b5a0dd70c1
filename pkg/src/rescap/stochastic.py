"""Ito integration with reproducible counter-based noise, the resonance
metric, the stability horizon, and the capture-probability Monte Carlo.

Noise streams are keyed by (master seed, path index) through the Philox
counter-based generator, so every path's increments are a pure function of
its key: results do not depend on scheduling or worker count, and the
ensemble reduction happens in path-index order.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import ParticularSolution
from .envelope import DecayEnvelope
from .errors import BlowUpError, DomainError
from .trigpoly import AveragedSystem

_Z95 = 1.959963984540054


_IC_KEY_MASK = 0xD1B54A32D192ED03  # separates initial-condition draws from increments


@dataclass(frozen=True)
class NoiseStream:
    """Deterministic Gaussian increments for one sample path.

    The increment sequence is a pure function of (master seed, path index):
    identical across runs, platforms, and worker counts.  Initial-condition
    uniforms come from a disjoint counter stream under the same key pair.
    """

    master_seed: int
    path_index: int
    counter: int = 0

    def _generator(self, salt: int = 0) -> np.random.Generator:
        key = ((self.master_seed ^ salt) & (2**64 - 1), self.path_index)
        return np.random.Generator(np.random.Philox(key=key))

    def uniforms(self, n: int) -> np.ndarray:
        return self._generator(_IC_KEY_MASK).random(n)

    def increments(self, n_steps: int, dt: float, n_channels: int = 2) -> np.ndarray:
        """(n_steps, n_channels) Wiener increments, variance dt each."""
        gen = self._generator()
        if self.counter:
            gen.standard_normal((self.counter, n_channels))
        return gen.standard_normal((n_steps, n_channels)) * math.sqrt(dt)


@dataclass
class SamplePath:
    t: np.ndarray
    states: np.ndarray  # (n, 2) in the system chart
    r: np.ndarray
    phi: np.ndarray  # unwrapped
    psi: np.ndarray  # phi - kappa S / varkappa
    escaped: bool
    escape_time: float | None
    master_seed: int = 0
    path_index: int = 0


def integrate_sde(sys, init, t0: float, T: float, dt: float, stream: NoiseStream,
                  record_every: int = 1) -> SamplePath:
    """Euler-Maruyama on a fixed grid: X <- X + drift dt + eps A dW.

    Stops recording the chart series at escape (domain exit); the raw state
    keeps its last value afterwards.  Identical (seed, index) streams give
    bitwise-identical paths.
    """
    if dt <= 0 or T <= 0:
        raise DomainError("need positive dt and T")
    n_steps = int(math.ceil(T / dt))
    dw = stream.increments(n_steps, dt)
    eps = sys.epsilon
    y = np.array(init, dtype=float)
    ts = [t0]
    states = [y.copy()]
    escaped = False
    escape_time = None
    t = t0
    for i in range(n_steps):
        a = sys.drift(y, t)
        if eps != 0.0:
            g = sys.diffusion(y, t)
            y = y + a * dt + eps * (g @ dw[i])
        else:
            y = y + a * dt
        t = t0 + (i + 1) * dt
        if not np.all(np.isfinite(y)):
            raise BlowUpError(f"non-finite state at t = {t}", exit_time=t)
        if not escaped and not sys.in_domain(y):
            escaped = True
            escape_time = t
        if (i + 1) % record_every == 0 or i == n_steps - 1:
            ts.append(t)
            states.append(y.copy())
        if escaped:
            break

    ts = np.array(ts)
    states = np.array(states)
    r = np.empty(len(ts))
    phi_raw = np.empty(len(ts))
    last_good = len(ts)
    for i in range(len(ts)):
        try:
            r[i], phi_raw[i] = sys.amplitude_phase(states[i])
        except DomainError:
            last_good = i
            break
    ts, states, r, phi_raw = ts[:last_good], states[:last_good], r[:last_good], phi_raw[:last_good]
    if sys.chart == "polar":
        phi = phi_raw
    else:
        phi = np.unwrap(phi_raw)
    S_over = np.array([sys.phase.S(float(tt)) for tt in ts]) * (sys.kappa / sys.varkappa)
    psi = phi - S_over
    return SamplePath(
        t=ts, states=states, r=r, phi=phi, psi=psi,
        escaped=escaped, escape_time=escape_time,
        master_seed=stream.master_seed, path_index=stream.path_index,
    )


def resonance_metric(avg: AveragedSystem, ps: ParticularSolution, rho, psi, t):
    """Weighted distance to the resonant solution:
    sqrt((rho - rho_*)^2 mu^(1-n) + (psi - psi_*)^2)."""
    scalar = np.ndim(t) == 0 and np.ndim(rho) == 0 and np.ndim(psi) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    mu = np.array([ps.envelope.mu(float(x)) for x in tt])
    drho = np.atleast_1d(np.asarray(rho, dtype=float)) - ps.rho_star(tt)
    dpsi = np.atleast_1d(np.asarray(psi, dtype=float)) - ps.psi_star(tt)
    val = np.sqrt(drho * drho * mu ** (-(ps.n - 1)) + dpsi * dpsi)
    return float(val[0]) if scalar else val


def t_epsilon(env: DecayEnvelope, p: int, n: int, eps: float, l: float, t_star: float) -> float:
    """Stability horizon: root of zeta_{2p-n}(T + t*) - zeta_{2p-n}(t*) =
    eps^(-2(1-l)), or inf when mu^((2p-n)/2) is integrable."""
    if not 0.0 < l < 1.0:
        raise DomainError("l must lie in (0, 1)")
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    h = 2 * p - n
    if not env.zeta_divergent(h):
        return math.inf
    target = eps ** (-2.0 * (1.0 - l))
    f = lambda T: env.zeta(h, t_star, t_star + T).value - target
    hi = 1.0
    while f(hi) < 0.0:
        hi *= 4.0
        if hi > 1e18:
            raise DomainError("horizon bracket exceeded 1e18")
    return float(brentq(f, 0.0, hi, xtol=1e-12, rtol=1e-10))


@dataclass
class CaptureStats:
    n_paths: int
    n_captured: int
    n_escaped: int
    p_hat: float
    ci_low: float
    ci_high: float
    delta1: float
    eps2: float
    horizon: float
    t_star: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "n_captured": self.n_captured,
            "n_escaped": self.n_escaped,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "delta1": self.delta1,
            "eps2": self.eps2,
            "horizon": self.horizon,
            "t_star": self.t_star,
            "seed": self.seed,
        }


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    denom = 1.0 + z * z / n
    center = (ph + z * z / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _simulate_capture_path(sys, avg, ps, idx, seed, t_star, horizon, dt, delta1,
                           eps2, boundary, record_every):
    stream = NoiseStream(seed, idx)
    u = stream.uniforms(2)
    mu_star = avg.envelope.mu(t_star)
    radius = delta1 if boundary else delta1 * math.sqrt(u[0])
    angle = 2.0 * math.pi * u[1]
    drho = radius * math.cos(angle) * mu_star ** (0.5 * (avg.n - 1))
    dpsi = radius * math.sin(angle)
    rho = ps.rho_star(t_star) + drho
    psi = ps.psi_star(t_star) + dpsi
    # identity near-identity correction: (R, Psi) = (rho, psi)
    r = avg.r0 + rho * math.sqrt(mu_star)
    phi = avg.kappa / avg.varkappa * sys.phase.S(t_star) + psi
    init = sys.state_from_amplitude_phase(r, phi)
    path = integrate_sde(sys, init, t_star, horizon, dt, stream,
                         record_every=record_every)
    if sys.chart != "polar" and len(path.phi):
        # inverse chart returns phi mod 2pi; align the branch at the start
        offset = 2.0 * math.pi * round((phi - path.phi[0]) / (2.0 * math.pi))
        path.phi = path.phi + offset
        path.psi = path.psi + offset
    if path.escaped or len(path.t) < 2:
        return path, False, np.inf
    mu_t = np.array([avg.envelope.mu(float(x)) for x in path.t])
    rho_t = (path.r - avg.r0) / np.sqrt(mu_t)
    m_t = resonance_metric(avg, ps, rho_t[1:], path.psi[1:], path.t[1:])
    sup_m = float(np.max(m_t))
    return path, bool(sup_m < eps2), sup_m


def capture_probability(
    sys,
    avg: AveragedSystem,
    ps: ParticularSolution,
    n_paths: int,
    delta1: float,
    eps2: float,
    t_star: float,
    horizon: float,
    dt: float,
    seed: int,
    n_workers: int = 1,
    boundary: bool = False,
    t_max: float = 1e6,
    record_every: int = 1,
    keep_paths: bool = False,
):
    """Monte Carlo estimate of staying within the metric tube.

    Initial points are sampled uniformly in (or on, with `boundary`) the
    metric ball of radius delta1 at t*; a path counts as captured when the
    running sup of the metric stays below eps2 up to the horizon and the
    path never leaves the amplitude domain.  Deterministic given the seed,
    independent of n_workers.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if math.isinf(horizon):
        warnings.warn("infinite horizon clamped to t_max for simulation")
        horizon = max(t_max - t_star, dt)

    def run(idx):
        return _simulate_capture_path(
            sys, avg, ps, idx, seed, t_star, horizon, dt, delta1, eps2,
            boundary, record_every,
        )

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(run, range(n_paths)))
    else:
        results = [run(i) for i in range(n_paths)]

    n_captured = sum(1 for _, captured, _ in results if captured)
    n_escaped = sum(1 for path, _, _ in results if path.escaped)
    lo, hi = wilson_interval(n_captured, n_paths)
    stats = CaptureStats(
        n_paths=n_paths,
        n_captured=n_captured,
        n_escaped=n_escaped,
        p_hat=n_captured / n_paths,
        ci_low=lo,
        ci_high=hi,
        delta1=delta1,
        eps2=eps2,
        horizon=horizon,
        t_star=t_star,
        seed=seed,
    )
    if keep_paths:
        return stats, [p for p, _, _ in results]
    return stats
