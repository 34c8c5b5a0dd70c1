"""Resonance capture in planar oscillators under decaying perturbations and
multiplicative noise: averaging, regime classification, and Monte Carlo
stability estimation."""

__version__ = "0.1.0"

from .envelope import (
    CustomEnvelope,
    DecayEnvelope,
    PerturbationPhase,
    PowerEnvelope,
    PowerLogEnvelope,
    envelope_eval,
    mu_exponents,
    phase_S,
    zeta,
)
from .oscillator import ActionAngleState, DuffingOscillator
from .specfun import EllipticModulus, ellint_K, jacobi_sn_cn_dn
from .systems import DuffingSystem, Example1System, PerturbedSystem, make_system
from .trigpoly import AveragedSystem, TrigPoly, build_averaged, solve_homological, tp_average
from .dynamics import (
    ParticularSolution,
    RegimeReport,
    classify,
    dissipation_order,
    find_equilibria,
    integrate_truncated,
    particular_solution,
)
from .stochastic import (
    CaptureStats,
    NoiseStream,
    SamplePath,
    capture_probability,
    integrate_sde,
    resonance_metric,
    t_epsilon,
    wilson_interval,
)

__all__ = [
    "ActionAngleState",
    "AveragedSystem",
    "CaptureStats",
    "CustomEnvelope",
    "DecayEnvelope",
    "DuffingOscillator",
    "DuffingSystem",
    "EllipticModulus",
    "Example1System",
    "NoiseStream",
    "ParticularSolution",
    "PerturbationPhase",
    "PerturbedSystem",
    "PowerEnvelope",
    "PowerLogEnvelope",
    "RegimeReport",
    "SamplePath",
    "TrigPoly",
    "build_averaged",
    "capture_probability",
    "classify",
    "dissipation_order",
    "ellint_K",
    "envelope_eval",
    "find_equilibria",
    "integrate_sde",
    "integrate_truncated",
    "jacobi_sn_cn_dn",
    "make_system",
    "mu_exponents",
    "particular_solution",
    "phase_S",
    "resonance_metric",
    "solve_homological",
    "t_epsilon",
    "tp_average",
    "wilson_interval",
    "zeta",
]
