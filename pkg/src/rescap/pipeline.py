"""Command implementations shared by the CLI and the HTTP service.

Every command takes a RunConfig and returns a CommandResult holding the
JSON report (with the resolved config embedded) plus named CSV tables.
Commands are deterministic given the config, including the seed: repeated
runs produce byte-identical serialized reports.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .dynamics import classify, particular_solution
from .errors import AssumptionError, DegenerateError
from .stochastic import NoiseStream, capture_probability, integrate_sde, resonance_metric, t_epsilon
from .systems import PerturbedSystem, make_system
from .trigpoly import build_averaged


@dataclass
class CommandResult:
    report: dict
    tables: dict[str, str] = field(default_factory=dict)

    def report_json(self) -> str:
        return json.dumps(self.report, sort_keys=True, indent=2) + "\n"


def system_from_config(cfg: RunConfig) -> PerturbedSystem:
    return make_system(
        cfg.system.name,
        params=cfg.system.params,
        n=cfg.system.n,
        p=cfg.system.p,
        kappa=cfg.system.kappa,
        varkappa=cfg.varkappa,
        epsilon=cfg.system.epsilon,
        s0=cfg.s0,
        s=tuple(cfg.phase.s),
        tau0=cfg.envelope.tau0,
    )


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def cmd_resonance(cfg: RunConfig) -> CommandResult:
    """Resonant amplitude r0, slope eta, and an amplitude-frequency table."""
    sys_ = system_from_config(cfg)
    report = {
        "command": "resonance",
        "r0": sys_.r0,
        "eta": sys_.eta,
        "kappa": sys_.kappa,
        "varkappa": sys_.varkappa,
        "s0": sys_.phase.s0,
        "nu_target": sys_.kappa * sys_.phase.s0 / sys_.varkappa,
        "r_bound": sys_.r_bound,
        "config": cfg.resolved(),
    }
    rows = []
    if sys_.name == "duffing":
        nu_of = lambda r: sys_.oscillator.nu_derivative(r, 0)
    else:
        nu_of = sys_.nu
    for r in np.linspace(1e-3 * sys_.r_bound, 0.995 * sys_.r_bound, 200):
        rows.append((float(r), float(nu_of(float(r)))))
    tables = {"nu_curve.csv": _csv(["r", "nu"], rows)}
    return CommandResult(report=report, tables=tables)


def cmd_averaged(cfg: RunConfig, order: int | None = None) -> CommandResult:
    """Averaged coefficient tables and the leading phase profile lambda(psi)."""
    sys_ = system_from_config(cfg)
    N = order if order is not None else cfg.integration.order
    avg = build_averaged(sys_, N)
    psi = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    lam = avg.lam_tp.eval(0.0, psi, 0.0)
    report = {
        "command": "averaged",
        "order": N,
        "r0": avg.r0,
        "eta": avg.eta,
        "coefficients": avg.to_tables(),
        "config": cfg.resolved(),
    }
    tables = {"lambda.csv": _csv(["psi", "lambda"], zip(psi.tolist(), lam.tolist()))}
    return CommandResult(report=report, tables=tables)


def cmd_classify(cfg: RunConfig, order: int | None = None) -> CommandResult:
    """Regime report: locking vs drift with the dissipation data."""
    sys_ = system_from_config(cfg)
    N = order if order is not None else cfg.integration.order
    avg = build_averaged(sys_, N)
    rep = classify(avg)
    report = {"command": "classify", "config": cfg.resolved()}
    report.update(rep.to_dict())
    return CommandResult(report=report)


def _horizon(cfg: RunConfig, sys_, t_star: float) -> float:
    if cfg.monte_carlo.horizon == "fixed":
        if cfg.monte_carlo.T_fixed is None:
            raise AssumptionError("fixed horizon requested without monte_carlo.T_fixed")
        return cfg.monte_carlo.T_fixed
    return t_epsilon(
        sys_.envelope, sys_.p, sys_.n, sys_.epsilon, cfg.monte_carlo.l, t_star
    )


def _default_t_star(cfg: RunConfig, sys_) -> float:
    if cfg.monte_carlo.t_star is not None:
        return cfg.monte_carlo.t_star
    return max(10.0 * sys_.envelope.tau0, 500.0)


def _path_rows(sys_, avg, ps, path):
    mu = np.array([sys_.envelope.mu(float(x)) for x in path.t])
    rho = (path.r - sys_.r0) / np.sqrt(mu)
    if ps is not None:
        m = resonance_metric(avg, ps, rho, path.psi, path.t)
    else:
        m = np.full_like(path.t, float("nan"))
    if sys_.chart == "polar":
        x1 = path.r * np.cos(path.phi)
        x2 = -path.r * np.sin(path.phi)
    else:
        x1, x2 = path.states[:, 0], path.states[:, 1]
    for i in range(len(path.t)):
        yield (
            float(path.t[i]), float(x1[i]), float(x2[i]), float(path.r[i]),
            float(path.phi[i]), float(path.psi[i]), float(m[i]),
        )


def _locking_data(sys_, avg):
    try:
        rep = classify(avg)
    except (AssumptionError, DegenerateError):
        return None, None
    if rep.regime != "PhaseLocking":
        return rep, None
    return rep, particular_solution(avg, rep.psi0)


def cmd_simulate(cfg: RunConfig) -> CommandResult:
    """Sample paths started near the resonant orbit; figure-ready CSV."""
    sys_ = system_from_config(cfg)
    avg = build_averaged(sys_, cfg.integration.order)
    rep, ps = _locking_data(sys_, avg)
    t0 = cfg.integration.t0 if cfg.integration.t0 is not None else _default_t_star(cfg, sys_)
    dt = cfg.dt
    n_paths = cfg.simulate.n_paths
    record_every = max(cfg.monte_carlo.record_every, int(max(1, 0.2 / dt)))
    rows = []
    summaries = []
    for idx in range(n_paths):
        stream = NoiseStream(cfg.monte_carlo.seed, idx)
        u = stream.uniforms(2)
        r_init = sys_.r0 * (1.0 + cfg.simulate.r_offset * (2.0 * u[0] - 1.0))
        if cfg.simulate.psi_init is not None:
            shift = cfg.simulate.psi_init + 0.02 * idx
        else:
            shift = 2.0 * math.pi * u[1]
        phi_init = sys_.kappa / sys_.varkappa * sys_.phase.S(t0) + shift
        init = sys_.state_from_amplitude_phase(r_init, phi_init)
        path = integrate_sde(sys_, init, t0, cfg.integration.T, dt, stream,
                             record_every=record_every)
        for row in _path_rows(sys_, avg, ps, path):
            rows.append((idx,) + row)
        summaries.append({
            "path_id": idx,
            "escaped": path.escaped,
            "escape_time": path.escape_time,
            "final_r": float(path.r[-1]) if len(path.r) else None,
            "final_psi": float(path.psi[-1]) if len(path.psi) else None,
        })
    report = {
        "command": "simulate",
        "t0": t0,
        "T": cfg.integration.T,
        "dt": dt,
        "regime": rep.regime if rep is not None else None,
        "paths": summaries,
        "config": cfg.resolved(),
    }
    tables = {
        "paths.csv": _csv(["path_id", "t", "x1", "x2", "r", "phi", "psi", "M"], rows)
    }
    return CommandResult(report=report, tables=tables)


def cmd_capture(cfg: RunConfig) -> CommandResult:
    """Capture-probability Monte Carlo at the configured horizon."""
    sys_ = system_from_config(cfg)
    avg = build_averaged(sys_, cfg.integration.order)
    rep, ps = _locking_data(sys_, avg)
    if ps is None:
        raise AssumptionError(
            "capture probability needs a PhaseLocking regime; "
            f"classification gave {rep.regime if rep else 'no equilibria'}"
        )
    t_star = _default_t_star(cfg, sys_)
    horizon = _horizon(cfg, sys_, t_star)
    stats = capture_probability(
        sys_, avg, ps,
        n_paths=cfg.monte_carlo.n_paths,
        delta1=cfg.monte_carlo.delta1,
        eps2=cfg.monte_carlo.eps2,
        t_star=t_star,
        horizon=horizon,
        dt=cfg.dt,
        seed=cfg.monte_carlo.seed,
        n_workers=cfg.monte_carlo.n_workers,
        boundary=cfg.monte_carlo.boundary,
        t_max=cfg.monte_carlo.t_max,
        record_every=cfg.monte_carlo.record_every,
    )
    report = {"command": "capture", "psi0": rep.psi0, "config": cfg.resolved()}
    report.update(stats.to_dict())
    return CommandResult(report=report)


COMMANDS = {
    "resonance": cmd_resonance,
    "averaged": cmd_averaged,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "capture": cmd_capture,
}
