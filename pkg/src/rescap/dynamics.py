"""Deterministic analysis of the averaged system: equilibria of the limiting
phase equation, dissipation order, regime classification, the resonant
particular solution, and fixed-step integration of the truncated field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import AssumptionError, BlowUpError, DegenerateError, DomainError
from .trigpoly import AveragedSystem, TrigPoly

_XI_DEGENERATE = 1e-10
_DIV_TOL = 1e-12

EPS_BOX = 0.1  # near-identity box used for the working domain


@dataclass
class RegimeReport:
    regime: str  # PhaseLocking | PhaseDrift | Degenerate | UnstableSaddle
    psi0: float | None
    xi: float | None
    eta: float
    h: int | None
    gamma_h: float | None
    gamma_tilde_h: float | None
    z0: float | None
    horizon: str  # Infinite | TEpsilon
    equilibria: list[dict] = field(default_factory=list)
    zeta_h_divergent: bool | None = None
    zeta_2n1_divergent: bool | None = None
    m: int = 0
    chi_m: float = 0.0
    n: int = 0
    p: int = 0

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "psi0": self.psi0,
            "xi": self.xi,
            "eta": self.eta,
            "h": self.h,
            "gamma_h": self.gamma_h,
            "gamma_tilde_h": self.gamma_tilde_h,
            "z0": self.z0,
            "horizon": self.horizon,
            "equilibria": self.equilibria,
            "zeta_h_divergent": self.zeta_h_divergent,
            "zeta_2n1_divergent": self.zeta_2n1_divergent,
        }


def find_equilibria(avg: AveragedSystem, grid_size: int = 1024) -> list[tuple[float, float]]:
    """All roots of lambda on [0, 2 pi), with the spectral slope xi at each.

    Sign-change scan on a uniform grid refined by bracketed root-finding;
    an empty list means lambda has no zeros (phase-drift hypothesis).
    Roots with |xi| below 1e-10 raise DegenerateError.
    """
    lam = avg.lam_tp
    dlam = lam.d_psi()
    grid = np.linspace(0.0, 2.0 * np.pi, grid_size, endpoint=False)
    vals = lam.eval(0.0, grid, 0.0)
    scale = max(1.0, float(np.max(np.abs(vals))))
    roots: list[float] = []
    f = lambda x: float(lam.eval(0.0, x, 0.0))
    df = lambda x: float(dlam.eval(0.0, x, 0.0))
    for i in range(grid_size):
        a = grid[i]
        b = grid[i + 1] if i + 1 < grid_size else 2.0 * np.pi
        fa = vals[i]
        fb = vals[(i + 1) % grid_size]
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(float(brentq(f, a, b, xtol=1e-13)))
        else:
            # tangential touch: a critical point of lambda sitting on zero
            da, db = df(a), df(b)
            if da * db < 0.0:
                crit = float(brentq(df, a, b, xtol=1e-13))
                if abs(f(crit)) <= 1e-9 * scale:
                    roots.append(crit)
    if not roots:
        return []
    out = []
    for psi0 in roots:
        xi = df(psi0)
        if abs(xi) < _XI_DEGENERATE:
            raise DegenerateError(
                f"equilibrium at psi0 = {psi0:.6f} has |xi| < {_XI_DEGENERATE}: "
                "center-saddle bifurcation case"
            )
        out.append((psi0, xi))
    return out


def dissipation_order(avg: AveragedSystem, psi0: float) -> tuple[int, float, float, float]:
    """(h, gamma_h, gamma_tilde_h, z0) from the first non-conservative order.

    h is the smallest k with d_rho Lambda_k + d_psi Omega_k not identically
    zero (spectrally, any coefficient above 1e-12); gamma_h evaluates that
    divergence at (0, psi0).
    """
    m, chi_m = avg.envelope.exponents()
    h = None
    div_tp = None
    for k in range(2, avg.N + 1):
        div = avg.Lambda[k].d_rho() + avg.Omega[k].d_psi()
        if not div.is_zero(_DIV_TOL):
            h, div_tp = k, div
            break
    if h is None:
        raise AssumptionError(
            f"no dissipative order found up to N = {avg.N}: "
            "the divergence of every averaged coefficient vanishes"
        )
    gamma_h = float(div_tp.eval(0.0, psi0, 0.0))
    if abs(gamma_h) <= _DIV_TOL * max(1.0, div_tp.max_abs()):
        raise AssumptionError(f"divergence at order {h} vanishes at the equilibrium")
    gamma_tilde = gamma_h - (chi_m * avg.n / 2.0 if h == 2 * m else 0.0)
    if h < 2 * m:
        z0 = 0.5
    elif chi_m == 0.0:
        z0 = 0.5  # limiting value of the ratio branch as chi_m -> 0-
    else:
        z0 = 0.5 * min(1.0, gamma_tilde / chi_m)
    return h, gamma_h, gamma_tilde, z0


def classify(avg: AveragedSystem) -> RegimeReport:
    """Phase-locking vs phase-drift per the averaged-system hypotheses.

    Locking requires an equilibrium with xi*eta < 0 whose corrected
    dissipation coefficient is negative, together with m >= n and 2p >= n;
    drift requires lambda to have no zeros and zeta_{2n-1} to diverge.
    """
    m, chi_m = avg.envelope.exponents()
    eta = avg.eta
    zeta_2n1_div = avg.envelope.zeta_divergent(2 * avg.n - 1)
    horizon = "Infinite" if not avg.envelope.zeta_divergent(2 * avg.p - avg.n) else "TEpsilon"

    equilibria = find_equilibria(avg)
    report = RegimeReport(
        regime="PhaseDrift",
        psi0=None,
        xi=None,
        eta=eta,
        h=None,
        gamma_h=None,
        gamma_tilde_h=None,
        z0=None,
        horizon=horizon,
        m=m,
        chi_m=chi_m,
        n=avg.n,
        p=avg.p,
        zeta_2n1_divergent=zeta_2n1_div,
    )

    if not equilibria:
        if not zeta_2n1_div:
            raise AssumptionError(
                "lambda has no zeros but zeta_{2n-1} converges: drift lemma inapplicable"
            )
        report.regime = "PhaseDrift"
        return report

    best = None
    for psi0, xi in equilibria:
        stable = xi * eta < 0.0
        entry = {"psi0": psi0, "xi": xi, "branch": "center" if stable else "saddle"}
        h, gamma_h, gamma_tilde, z0 = dissipation_order(avg, psi0)
        entry.update({"h": h, "gamma_h": gamma_h, "gamma_tilde_h": gamma_tilde, "z0": z0})
        report.equilibria.append(entry)
        hypotheses = stable and gamma_tilde < 0.0 and m >= avg.n and 2 * avg.p >= avg.n
        if hypotheses and best is None:
            best = entry
    if best is not None:
        report.regime = "PhaseLocking"
        report.psi0 = best["psi0"]
        report.xi = best["xi"]
        report.h = best["h"]
        report.gamma_h = best["gamma_h"]
        report.gamma_tilde_h = best["gamma_tilde_h"]
        report.z0 = best["z0"]
        report.zeta_h_divergent = avg.envelope.zeta_divergent(best["h"])
    else:
        report.regime = "UnstableSaddle"
        first = report.equilibria[0]
        report.psi0 = first["psi0"]
        report.xi = first["xi"]
        report.h = first["h"]
        report.gamma_h = first["gamma_h"]
        report.gamma_tilde_h = first["gamma_tilde_h"]
        report.z0 = first["z0"]
    return report


@dataclass(frozen=True)
class ParticularSolution:
    """Truncated series for the attracting resonant solution.

    rho_*(t) = sum rho_k mu^(k/2), psi_*(t) = psi0 + sum psi_k mu^(k/2),
    with coefficients from order-by-order matching in the truncated field.
    """

    psi0: float
    H: int
    rho_coeffs: tuple[float, ...]
    psi_coeffs: tuple[float, ...]
    envelope: object
    n: int

    def _series(self, t, coeffs, base):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        mu = np.array([self.envelope.mu(float(x)) for x in tt])
        out = np.full_like(mu, base)
        for k, c in enumerate(coeffs, start=1):
            if c != 0.0:
                out += c * mu ** (0.5 * k)
        return float(out[0]) if np.ndim(t) == 0 else out

    def rho_star(self, t):
        return self._series(t, self.rho_coeffs, 0.0)

    def psi_star(self, t):
        return self._series(t, self.psi_coeffs, self.psi0)


def particular_solution(avg: AveragedSystem, psi0: float, H: int | None = None) -> ParticularSolution:
    """Coefficients of the resonant series by forward substitution.

    At each step j the amplitude coefficient solves the linear relation with
    slope eta from the leading phase equation, and the phase coefficient the
    relation with slope xi from the leading amplitude equation; orders beyond
    the built expansion contribute nothing to the truncated field.
    """
    n = avg.n
    if H is None:
        H = dissipation_order(avg, psi0)[0]
    xi = float(avg.lam_tp.d_psi().eval(0.0, psi0, 0.0))
    eta = avg.eta
    if xi == 0.0 or eta == 0.0:
        raise DomainError("particular solution needs xi != 0 and eta != 0")
    if H - 1 > 3:
        raise DomainError("series implemented for H - 1 <= 3 coefficients")

    rho_c: list[float] = []
    psi_c: list[float] = []

    def series_eval(target: TrigPoly, order_needed: int) -> float:
        """Coefficient of mu^(order_needed/2) in target(rho_*(t), psi_*(t)),
        using the currently known coefficients (higher ones set to zero)."""
        total = 0.0
        for alpha in range(0, order_needed + 1):
            for beta in range(0, order_needed + 1 - alpha):
                deriv = target.derivative(alpha, beta)
                if deriv.is_zero():
                    continue
                base = float(deriv.eval(0.0, psi0, 0.0)) / (
                    math.factorial(alpha) * math.factorial(beta)
                )
                if base == 0.0:
                    continue
                # sum over compositions of order_needed into alpha rho-orders
                # and beta psi-orders
                for combo in _compositions(order_needed, alpha + beta):
                    prod = 1.0
                    for idx, kk in enumerate(combo):
                        coeffs = rho_c if idx < alpha else psi_c
                        if kk - 1 >= len(coeffs):
                            prod = 0.0
                            break
                        prod *= coeffs[kk - 1]
                    total += base * prod
        return total

    for j in range(1, H):
        # phase equation at half-order 1 + j fixes rho_j through eta
        acc = 0.0
        for kp in range(1, avg.N + 1):
            if kp > 1 + j:
                continue
            acc += series_eval(avg.Omega[kp], 1 + j - kp)
        rho_c.append(0.0)
        psi_c.append(0.0)
        rho_c[-1] = -acc / eta
        # amplitude equation at half-order 2n - 1 + j fixes psi_j through xi
        acc = 0.0
        for kp in range(1, avg.N + 1):
            if kp > 2 * n - 1 + j:
                continue
            acc += series_eval(avg.Lambda[kp], 2 * n - 1 + j - kp)
        psi_c[-1] = -acc / xi
    return ParticularSolution(
        psi0=psi0, H=H, rho_coeffs=tuple(rho_c), psi_coeffs=tuple(psi_c),
        envelope=avg.envelope, n=n,
    )


def _compositions(total: int, parts: int):
    """Ordered tuples of `parts` positive integers summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class TruncatedPath:
    t: np.ndarray
    rho: np.ndarray
    psi: np.ndarray
    exited: bool
    exit_time: float | None


class _FieldEvaluator:
    """Flattened spectral tables for fast pointwise evaluation of the
    truncated averaged field."""

    def __init__(self, avg: AveragedSystem):
        self.envelope = avg.envelope
        rows = {"lam": [], "om": []}
        for name, coll in (("lam", avg.Lambda), ("om", avg.Omega)):
            for k in range(1, avg.N + 1):
                tp = coll[k].trimmed()
                nz = np.argwhere(tp.c != 0)
                for j_idx, l_idx, d in nz:
                    rows[name].append(
                        (0.5 * k, j_idx - tp.J, d, tp.c[j_idx, l_idx, d])
                    )
        self._tables = {}
        for name, entries in rows.items():
            if entries:
                kk, jj, dd, cc = map(np.array, zip(*entries))
            else:
                kk = jj = dd = np.zeros(0)
                cc = np.zeros(0, dtype=complex)
            self._tables[name] = (kk.astype(float), jj.astype(float), dd.astype(int), cc)

    def __call__(self, t: float, rho, psi):
        """Evaluate (Lambda-hat, Omega-hat); broadcasts over rho/psi arrays."""
        mu = self.envelope.mu(t)
        ell = self.envelope.ell(t)
        rho_a = np.asarray(rho, dtype=float)
        psi_a = np.asarray(psi, dtype=float)
        out = []
        for name in ("lam", "om"):
            kk, jj, dd, cc = self._tables[name]
            if len(kk) == 0:
                out.append(np.zeros_like(rho_a))
                continue
            val = np.sum(
                (cc * mu**kk) * rho_a[..., None] ** dd * np.exp(1j * jj * psi_a[..., None]),
                axis=-1,
            )
            out.append(val.real)
        lam = out[0] - 0.5 * ell * rho_a
        if rho_a.ndim == 0:
            return float(lam), float(out[1])
        return lam, out[1]


def integrate_truncated(
    avg: AveragedSystem,
    init: tuple[float, float],
    t0: float,
    T: float,
    dt: float,
    r_bound: float | None = None,
    stop_on_exit: bool = True,
) -> TruncatedPath:
    """Classic 4th-order fixed-step integration of the truncated field.

    Flags exit from the working domain (amplitude residual beyond the
    t0-scaled strip) and stops there by default; non-finite states raise
    BlowUpError with the time.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    n_steps = int(math.ceil(T / dt))
    ts = [t0]
    rho = [float(init[0])]
    psi = [float(init[1])]
    mu0 = avg.envelope.mu(t0)
    if r_bound is None:
        r_bound = 2.0**0.5 * abs(avg.r0)  # generous default strip
    d_minus = (r_bound - abs(avg.r0)) / math.sqrt(mu0) - EPS_BOX
    d_plus = (r_bound + abs(avg.r0)) / math.sqrt(mu0) - EPS_BOX
    exited = False
    exit_time = None
    field = _FieldEvaluator(avg)

    y = np.array(init, dtype=float)
    for i in range(n_steps):
        t = t0 + i * dt
        k1 = field(t, y[0], y[1])
        k2 = field(t + dt / 2, y[0] + dt / 2 * k1[0], y[1] + dt / 2 * k1[1])
        k3 = field(t + dt / 2, y[0] + dt / 2 * k2[0], y[1] + dt / 2 * k2[1])
        k4 = field(t + dt, y[0] + dt * k3[0], y[1] + dt * k3[1])
        y = y + (dt / 6.0) * (
            np.array(k1) + 2 * np.array(k2) + 2 * np.array(k3) + np.array(k4)
        )
        t_next = t0 + (i + 1) * dt
        if not np.all(np.isfinite(y)):
            raise BlowUpError(f"non-finite state at t = {t_next}", exit_time=t_next)
        ts.append(t_next)
        rho.append(float(y[0]))
        psi.append(float(y[1]))
        if not exited and (y[0] > d_minus or y[0] < -d_plus):
            exited = True
            exit_time = t_next
            if stop_on_exit:
                break
    return TruncatedPath(
        t=np.array(ts), rho=np.array(rho), psi=np.array(psi),
        exited=exited, exit_time=exit_time,
    )
