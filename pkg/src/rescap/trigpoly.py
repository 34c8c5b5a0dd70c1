"""Trigonometric polynomials in two angles with polynomial amplitude
dependence, and the order-by-order averaging of the resonant system.

A TrigPoly stores complex Fourier coefficients c[j, l, d] for the term
rho^d exp(i (j psi + (l / varkappa) S)).  The S "numerator" l makes every
frequency that occurs near a kappa:varkappa resonance representable
exactly: the angle phi = (kappa/varkappa) S + psi contributes S-numerators
j*kappa, and direct 2pi-periodic S dependence contributes multiples of
varkappa.  Real-valued polynomials keep Hermitian symmetry
c[-j, -l] = conj(c[j, l]) by construction.

The averaging engine removes the S dependence of the drift order by order
in mu^(1/2): at each half-order k the generator pair (u_k, v_k) solves the
homological equation s0 d/dS (u_k, v_k) = (Lambda_k, Omega_k) - g_k, where
g_k collects the expanded drift, the transport terms generated by lower
orders, the noise-induced Hessian corrections, and the Taylor feedback of
already-averaged coefficients.  Averaged coefficients are exact in the
spectral representation; nothing is truncated silently (mode caps raise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapError, DomainError, SolvabilityError, UnsupportedOrderError

DEFAULT_CAPS = (16, 16, 6)  # psi modes, S numerators, rho degree


class TrigPoly:
    """Immutable-by-convention spectral polynomial; see module docstring."""

    __slots__ = ("c", "varkappa")

    def __init__(self, c: np.ndarray, varkappa: int):
        c = np.asarray(c, dtype=complex)
        if c.ndim != 3 or c.shape[0] % 2 == 0 or c.shape[1] % 2 == 0:
            raise ValueError("coefficient array must have odd psi/S extents")
        self.c = c
        self.varkappa = int(varkappa)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, varkappa: int) -> "TrigPoly":
        return cls(np.zeros((1, 1, 1), dtype=complex), varkappa)

    @classmethod
    def const(cls, value: float, varkappa: int) -> "TrigPoly":
        arr = np.zeros((1, 1, 1), dtype=complex)
        arr[0, 0, 0] = value
        return cls(arr, varkappa)

    @classmethod
    def harmonic(cls, varkappa: int, j: int, l: int, d: int = 0, coeff: complex = 1.0) -> "TrigPoly":
        """coeff * rho^d e^{i(j psi + l S / varkappa)} plus its conjugate mirror."""
        J, L = abs(j), abs(l)
        arr = np.zeros((2 * J + 1, 2 * L + 1, d + 1), dtype=complex)
        arr[j + J, l + L, d] += coeff
        arr[-j + J, -l + L, d] += np.conj(coeff)
        return cls(arr, varkappa)

    @classmethod
    def cos_psi(cls, varkappa: int, n: int = 1, d: int = 0, scale: float = 1.0) -> "TrigPoly":
        return cls.harmonic(varkappa, n, 0, d, 0.5 * scale)

    @classmethod
    def sin_psi(cls, varkappa: int, n: int = 1, d: int = 0, scale: float = 1.0) -> "TrigPoly":
        return cls.harmonic(varkappa, n, 0, d, -0.5j * scale)

    @classmethod
    def cos_S(cls, varkappa: int, n: int = 1, scale: float = 1.0) -> "TrigPoly":
        return cls.harmonic(varkappa, 0, n * varkappa, 0, 0.5 * scale)

    @classmethod
    def sin_S(cls, varkappa: int, n: int = 1, scale: float = 1.0) -> "TrigPoly":
        return cls.harmonic(varkappa, 0, n * varkappa, 0, -0.5j * scale)

    @classmethod
    def angle_harmonic(cls, varkappa: int, kappa: int, j: int, coeff: complex) -> "TrigPoly":
        """coeff e^{i j phi} + conj, with phi = (kappa/varkappa) S + psi."""
        return cls.harmonic(varkappa, j, j * kappa, 0, coeff)

    @classmethod
    def rho_poly(cls, varkappa: int, coeffs) -> "TrigPoly":
        arr = np.zeros((1, 1, len(coeffs)), dtype=complex)
        arr[0, 0, :] = coeffs
        return cls(arr, varkappa)

    # -- geometry ----------------------------------------------------------

    @property
    def J(self) -> int:
        return (self.c.shape[0] - 1) // 2

    @property
    def L(self) -> int:
        return (self.c.shape[1] - 1) // 2

    @property
    def D(self) -> int:
        return self.c.shape[2] - 1

    def _padded_to(self, J: int, L: int, D: int) -> np.ndarray:
        out = np.zeros((2 * J + 1, 2 * L + 1, D + 1), dtype=complex)
        out[J - self.J : J + self.J + 1, L - self.L : L + self.L + 1, : self.D + 1] = self.c
        return out

    def trimmed(self) -> "TrigPoly":
        """Shrink the bounding box around the exactly nonzero coefficients."""
        nz = np.argwhere(self.c != 0)
        if nz.size == 0:
            return TrigPoly.zero(self.varkappa)
        J, L = self.J, self.L
        jmax = int(max(abs(nz[:, 0] - J).max(), 0))
        lmax = int(max(abs(nz[:, 1] - L).max(), 0))
        dmax = int(nz[:, 2].max())
        out = self.c[J - jmax : J + jmax + 1, L - lmax : L + lmax + 1, : dmax + 1]
        return TrigPoly(out.copy(), self.varkappa)

    # -- algebra -----------------------------------------------------------

    def _binary(self, other: "TrigPoly", op) -> "TrigPoly":
        if self.varkappa != other.varkappa:
            raise ValueError("mixed S periods")
        J, L, D = max(self.J, other.J), max(self.L, other.L), max(self.D, other.D)
        return TrigPoly(op(self._padded_to(J, L, D), other._padded_to(J, L, D)), self.varkappa)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TrigPoly.const(other, self.varkappa)
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TrigPoly.const(other, self.varkappa)
        return self._binary(other, np.subtract)

    def __neg__(self):
        return TrigPoly(-self.c, self.varkappa)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return TrigPoly(self.c * other, self.varkappa)
        if self.varkappa != other.varkappa:
            raise ValueError("mixed S periods")
        a, b = self.trimmed(), other.trimmed()
        J, L, D = a.J + b.J, a.L + b.L, a.D + b.D
        out = np.zeros((2 * J + 1, 2 * L + 1, D + 1), dtype=complex)
        nz = np.argwhere(b.c != 0)
        for jb, lb, db in nz:
            out[
                jb : jb + 2 * a.J + 1,
                lb : lb + 2 * a.L + 1,
                db : db + a.D + 1,
            ] += a.c * b.c[jb, lb, db]
        return TrigPoly(out, self.varkappa)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return TrigPoly(self.c / scalar, self.varkappa)

    def rho_shift(self, power: int = 1) -> "TrigPoly":
        """Multiply by rho^power."""
        out = np.zeros((2 * self.J + 1, 2 * self.L + 1, self.D + 1 + power), dtype=complex)
        out[:, :, power:] = self.c
        return TrigPoly(out, self.varkappa)

    def d_rho(self) -> "TrigPoly":
        if self.D == 0:
            return TrigPoly.zero(self.varkappa)
        out = self.c[:, :, 1:] * np.arange(1, self.D + 1)[None, None, :]
        return TrigPoly(out, self.varkappa)

    def d_psi(self) -> "TrigPoly":
        jj = np.arange(-self.J, self.J + 1)
        return TrigPoly(self.c * (1j * jj)[:, None, None], self.varkappa)

    def d_S(self) -> "TrigPoly":
        ll = np.arange(-self.L, self.L + 1)
        return TrigPoly(self.c * (1j * ll / self.varkappa)[None, :, None], self.varkappa)

    def derivative(self, n_rho: int = 0, n_psi: int = 0) -> "TrigPoly":
        out = self
        for _ in range(n_rho):
            out = out.d_rho()
        for _ in range(n_psi):
            out = out.d_psi()
        return out

    def average_S(self) -> "TrigPoly":
        """Keep only the S-mean (numerator l = 0); exact, no quadrature."""
        out = np.zeros_like(self.c)
        out[:, self.L, :] = self.c[:, self.L, :]
        return TrigPoly(out, self.varkappa).trimmed()

    # -- queries -----------------------------------------------------------

    def max_abs(self) -> float:
        return float(np.abs(self.c).max()) if self.c.size else 0.0

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def rho_degree(self, tol: float = 0.0) -> int:
        for d in range(self.D, -1, -1):
            if np.abs(self.c[:, :, d]).max() > tol:
                return d
        return 0

    def psi_degree(self, tol: float = 0.0) -> int:
        J = self.J
        for j in range(J, -1, -1):
            if np.abs(self.c[J + j, :, :]).max() > tol or np.abs(self.c[J - j, :, :]).max() > tol:
                return j
        return 0

    def s_degree(self, tol: float = 0.0) -> int:
        L = self.L
        for l in range(L, -1, -1):
            if np.abs(self.c[:, L + l, :]).max() > tol or np.abs(self.c[:, L - l, :]).max() > tol:
                return l
        return 0

    def s_mean_residual(self) -> float:
        """Largest coefficient magnitude in the l = 0 slice."""
        return float(np.abs(self.c[:, self.L, :]).max())

    def hermitian_defect(self) -> float:
        flipped = np.conj(self.c[::-1, ::-1, :])
        return float(np.abs(self.c - flipped).max())

    def assert_within(self, J: int, L: int, D: int, what: str = "TrigPoly"):
        t = self.trimmed()
        if t.J > J or t.L > L or t.D > D:
            raise CapError(
                f"{what} needs modes (J={t.J}, L={t.L}, D={t.D}) "
                f"beyond the caps (J={J}, L={L}, D={D})"
            )

    def eval(self, rho, psi, S):
        """Evaluate at broadcastable (rho, psi, S); returns real values."""
        rho, psi, S = np.broadcast_arrays(
            np.asarray(rho, float), np.asarray(psi, float), np.asarray(S, float)
        )
        shape = rho.shape
        rho, psi, S = rho.ravel(), psi.ravel(), S.ravel()
        jj = np.arange(-self.J, self.J + 1)
        ll = np.arange(-self.L, self.L + 1)
        ephi = np.exp(1j * np.outer(psi, jj))
        es = np.exp(1j * np.outer(S, ll) / self.varkappa)
        rp = rho[:, None] ** np.arange(self.D + 1)[None, :]
        val = np.einsum("pj,pl,pd,jld->p", ephi, es, rp, self.c)
        out = val.real.reshape(shape)
        return float(out) if out.ndim == 0 else out

    def table(self) -> list[dict]:
        """Mode table for JSON reports: complex poly coefficients as [re, im]."""
        rows = []
        t = self.trimmed()
        for j in range(-t.J, t.J + 1):
            for l in range(-t.L, t.L + 1):
                poly = t.c[j + t.J, l + t.L, :]
                if np.abs(poly).max() == 0.0:
                    continue
                rows.append(
                    {"j": j, "l": l, "poly": [[float(z.real), float(z.imag)] for z in poly]}
                )
        return rows


def tp_average(f: TrigPoly) -> TrigPoly:
    """Average over the 2 pi varkappa period of S; keeps the l = 0 modes."""
    return f.average_S()


def solve_homological(g: TrigPoly, s0: float) -> TrigPoly:
    """Unique zero-S-mean u with s0 dU/dS = g, mode-wise division.

    Rejects right-hand sides whose S-mean exceeds 1e-14 (relative):
    the equation is solvable only in the class of zero-mean functions.
    """
    if s0 == 0.0:
        raise DomainError("homological equation needs s0 != 0")
    scale = max(1.0, g.max_abs())
    if g.s_mean_residual() > 1e-14 * scale:
        raise SolvabilityError("nonzero S-mean right-hand side")
    ll = np.arange(-g.L, g.L + 1)
    denom = 1j * s0 * ll / g.varkappa
    denom[g.L] = 1.0  # mean slice is zero; avoid 0/0
    out = g.c / denom[None, :, None]
    out[:, g.L, :] = 0.0
    return TrigPoly(out, g.varkappa).trimmed()


# -- graded series helpers --------------------------------------------------


def _series_mul(a: dict[int, TrigPoly], b: dict[int, TrigPoly], N: int, vk: int) -> dict[int, TrigPoly]:
    out: dict[int, TrigPoly] = {}
    for ka, ta in a.items():
        for kb, tb in b.items():
            k = ka + kb
            if k > N:
                continue
            prod = ta * tb
            out[k] = out.get(k, TrigPoly.zero(vk)) + prod
    return out


def _series_pow(a: dict[int, TrigPoly], p: int, N: int, vk: int) -> dict[int, TrigPoly]:
    out = {0: TrigPoly.const(1.0, vk)}
    for _ in range(p):
        out = _series_mul(out, a, N, vk)
    return out


def taylor_corrections(target: TrigPoly, d_rho: dict[int, TrigPoly], d_psi: dict[int, TrigPoly], N: int) -> dict[int, TrigPoly]:
    """Graded Taylor expansion of target(rho + dR, psi + dPsi) minus target.

    d_rho/d_psi map half-orders (>= 1) to increments; the result maps
    half-orders k >= 1 to the correction entering mu^(k/2).
    """
    vk = target.varkappa
    out: dict[int, TrigPoly] = {}
    for alpha in range(0, N + 1):
        pr = _series_pow(d_rho, alpha, N, vk) if alpha else {0: TrigPoly.const(1.0, vk)}
        for beta in range(0, N + 1 - alpha):
            if alpha + beta == 0:
                continue
            deriv = target.derivative(alpha, beta)
            if deriv.is_zero():
                continue
            ps = _series_pow(d_psi, beta, vk=vk, N=N) if beta else {0: TrigPoly.const(1.0, vk)}
            prod = _series_mul(pr, ps, N, vk)
            fac = 1.0 / (math.factorial(alpha) * math.factorial(beta))
            for k, tp in prod.items():
                if k == 0:
                    continue
                out[k] = out.get(k, TrigPoly.zero(vk)) + deriv * tp * fac
    return out


# -- averaged system ---------------------------------------------------------


@dataclass
class AveragedSystem:
    """Ordered averaged coefficients and generators of the resonant normal form."""

    N: int
    n: int
    p: int
    kappa: int
    varkappa: int
    s0: float
    r0: float
    eta: float
    epsilon: float
    envelope: object
    phase: object
    Lambda: dict[int, TrigPoly] = field(default_factory=dict)
    Omega: dict[int, TrigPoly] = field(default_factory=dict)
    u: dict[int, TrigPoly] = field(default_factory=dict)
    v: dict[int, TrigPoly] = field(default_factory=dict)

    @property
    def lam_tp(self) -> TrigPoly:
        """Leading averaged amplitude coefficient Lambda_{2n-1}; rho-free."""
        return self.Lambda[2 * self.n - 1]

    def lam(self, psi):
        return self.lam_tp.eval(0.0, psi, 0.0)

    def hat_drift(self, rho: float, psi: float, t: float) -> tuple[float, float]:
        """Truncated averaged field: sum of Lambda_k mu^(k/2) - ell rho / 2,
        and sum of Omega_k mu^(k/2)."""
        mu = self.envelope.mu(t)
        ell = self.envelope.ell(t)
        lam = -0.5 * ell * rho
        om = 0.0
        for k in range(1, self.N + 1):
            w = mu ** (0.5 * k)
            lam += w * self.Lambda[k].eval(rho, psi, 0.0)
            om += w * self.Omega[k].eval(rho, psi, 0.0)
        return lam, om

    def generator_shift(self, R, Psi, S, t) -> tuple[float, float]:
        """Near-identity offsets (sum u_k mu^(k/2), sum v_k mu^(k/2))."""
        mu = self.envelope.mu(t)
        du = dv = 0.0
        for k in range(1, self.N + 1):
            w = mu ** (0.5 * k)
            du += w * self.u[k].eval(R, Psi, S)
            dv += w * self.v[k].eval(R, Psi, S)
        return du, dv

    def validate(self, tol: float = 1e-8):
        n = self.n
        for k in range(1, self.N + 1):
            if self.Lambda[k].s_degree() != 0 or self.Omega[k].s_degree() != 0:
                raise AssertionError(f"averaged coefficient at order {k} keeps S modes")
            if self.Lambda[k].rho_degree(tol=1e-12) > max(k - 1, 0):
                raise AssertionError(f"deg_rho Lambda_{k} exceeds {k - 1}")
            if self.Omega[k].rho_degree(tol=1e-12) > k:
                raise AssertionError(f"deg_rho Omega_{k} exceeds {k}")
            if k < 2 * n - 1:
                if not self.Lambda[k].is_zero(tol):
                    raise AssertionError(f"Lambda_{k} should vanish below order 2n-1")
            if k <= 2 * n - 1 and not self.Omega[k].d_psi().is_zero(tol):
                raise AssertionError(f"Omega_{k} should be psi-free at order {k}")
        omega1 = self.Omega[1] - TrigPoly.rho_poly(self.varkappa, [0.0, self.eta])
        if not omega1.is_zero(1e-8 * max(1.0, abs(self.eta))):
            raise AssertionError("Omega_1 differs from eta * rho")
        if self.lam_tp.rho_degree(tol=1e-12) != 0:
            raise AssertionError("lambda must not depend on rho")

    def to_tables(self) -> list[dict]:
        rows = []
        for name, coll in (("Lambda", self.Lambda), ("Omega", self.Omega), ("u", self.u), ("v", self.v)):
            for k in sorted(coll):
                rows.append({"k": k, "target": name, "modes": coll[k].table()})
        return rows


def _trace_bhb(B_i, scalar_fn: TrigPoly, B_j, vk: int) -> TrigPoly:
    """tr(B_i^T H(f) B_j) with H the (rho, psi) Hessian of f."""
    H = [
        [scalar_fn.derivative(2, 0), scalar_fn.derivative(1, 1)],
        [scalar_fn.derivative(1, 1), scalar_fn.derivative(0, 2)],
    ]
    out = TrigPoly.zero(vk)
    for b in range(2):
        for a in range(2):
            for c in range(2):
                if B_i[a][b].is_zero() or H[a][c].is_zero() or B_j[c][b].is_zero():
                    continue
                out = out + B_i[a][b] * H[a][c] * B_j[c][b]
    return out


def build_averaged(sys, N: int, caps: tuple[int, int, int] = DEFAULT_CAPS) -> AveragedSystem:
    """Run the averaging recursion for the perturbed system up to order N.

    N counts powers of mu^(1/2) and must satisfy 2n-1 <= N <= min(4, 2m).
    Raises UnsupportedOrderError outside that range and CapError when a
    product leaves the spectral caps (nothing is truncated silently).
    """
    n, p = sys.n, sys.p
    vk = sys.varkappa
    m, _ = sys.envelope.exponents()
    if N > 4:
        raise UnsupportedOrderError(f"averaging implemented for N <= 4, got {N}")
    if N < 2 * n - 1:
        raise UnsupportedOrderError(f"averaging needs N >= 2n-1 = {2 * n - 1}, got {N}")
    if N > 2 * m:
        raise UnsupportedOrderError(f"envelope exponent m = {m} admits N <= {2 * m}")
    J_cap, L_cap, D_cap = caps
    s0 = sys.phase.s0
    eps = sys.epsilon

    def s_half(k: int) -> float:
        return sys.phase.s_coeff(k // 2) if k % 2 == 0 else 0.0

    drift_orders = sorted(sys.drift_orders())
    b1: dict[int, TrigPoly] = {}
    b2: dict[int, TrigPoly] = {}
    for k in range(1, N + 1):
        acc1 = TrigPoly.zero(vk)
        acc2 = TrigPoly.rho_poly(vk, [0.0] * k + [sys.nu_derivative(k) / math.factorial(k)])
        sk = s_half(k)
        if sk:
            acc2 = acc2 - TrigPoly.const(sys.kappa / vk * sk, vk)
        for j in drift_orders:
            i = k + 1 - 2 * j
            if i >= 0:
                acc1 = acc1 + sys.drift_coeff(1, j, i).rho_shift(i) / math.factorial(i)
            i = k - 2 * j
            if i >= 0:
                acc2 = acc2 + sys.drift_coeff(2, j, i).rho_shift(i) / math.factorial(i)
        b1[k] = acc1
        b2[k] = acc2

    need_hessian = eps != 0.0 and 4 * p - 1 <= N
    Bmats: dict[int, list[list[TrigPoly]]] = {}
    if need_hessian:
        diff_orders = sorted(sys.diffusion_orders())
        for k in range(2 * p - 1, N - 2 * p + 1):
            mat = [[TrigPoly.zero(vk) for _ in range(2)] for _ in range(2)]
            for col in range(2):
                for l in diff_orders:
                    i = k + 1 - 2 * l
                    if i >= 0:
                        mat[0][col] = mat[0][col] + sys.diffusion_coeff(1, col + 1, l, i).rho_shift(i) / math.factorial(i)
                    i = k - 2 * l
                    if i >= 0:
                        mat[1][col] = mat[1][col] + sys.diffusion_coeff(2, col + 1, l, i).rho_shift(i) / math.factorial(i)
            Bmats[k] = mat

    Lambda: dict[int, TrigPoly] = {}
    Omega: dict[int, TrigPoly] = {}
    u: dict[int, TrigPoly] = {}
    v: dict[int, TrigPoly] = {}

    for k in range(1, N + 1):
        C1 = TrigPoly.zero(vk)
        C2 = TrigPoly.zero(vk)
        for j in range(1, k):
            uk, vj = u[k - j], v[k - j]
            C1 = C1 + b1[j] * uk.d_rho() + b2[j] * uk.d_psi()
            C2 = C2 + b1[j] * vj.d_rho() + b2[j] * vj.d_psi()
            sj = s_half(j)
            if sj:
                C1 = C1 + uk.d_S() * sj
                C2 = C2 + vj.d_S() * sj
        if need_hessian and k >= 4 * p - 1:
            for i in Bmats:
                for jp in Bmats:
                    l = k - i - jp
                    if l < 1 or l >= k:
                        continue
                    C1 = C1 + _trace_bhb(Bmats[i], u[l], Bmats[jp], vk) * (eps**2 / 2.0)
                    C2 = C2 + _trace_bhb(Bmats[i], v[l], Bmats[jp], vk) * (eps**2 / 2.0)

        d_rho_series = {j: u[j] for j in range(1, k) if not u[j].is_zero()}
        d_psi_series = {j: v[j] for j in range(1, k) if not v[j].is_zero()}
        T1 = TrigPoly.zero(vk)
        T2 = TrigPoly.zero(vk)
        if d_rho_series or d_psi_series:
            for kp in range(1, k):
                if not Lambda[kp].is_zero():
                    T1 = T1 + taylor_corrections(Lambda[kp], d_rho_series, d_psi_series, N).get(
                        k - kp, TrigPoly.zero(vk)
                    )
                if not Omega[kp].is_zero():
                    T2 = T2 + taylor_corrections(Omega[kp], d_rho_series, d_psi_series, N).get(
                        k - kp, TrigPoly.zero(vk)
                    )

        g1 = b1[k] + C1 - T1
        g2 = b2[k] + C2 - T2
        Lambda[k] = tp_average(g1)
        Omega[k] = tp_average(g2)
        u[k] = solve_homological(Lambda[k] - g1, s0)
        v[k] = solve_homological(Omega[k] - g2, s0)
        for tp, what in ((Lambda[k], f"Lambda_{k}"), (Omega[k], f"Omega_{k}"), (u[k], f"u_{k}"), (v[k], f"v_{k}")):
            tp.assert_within(J_cap, L_cap, D_cap, what)

    avg = AveragedSystem(
        N=N,
        n=n,
        p=p,
        kappa=sys.kappa,
        varkappa=vk,
        s0=s0,
        r0=sys.r0,
        eta=sys.eta,
        epsilon=eps,
        envelope=sys.envelope,
        phase=sys.phase,
        Lambda=Lambda,
        Omega=Omega,
        u=u,
        v=v,
    )
    avg.validate()
    return avg
