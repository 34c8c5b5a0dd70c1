import math

import numpy as np
import pytest

from rescap.envelope import (
    CustomEnvelope,
    PerturbationPhase,
    PowerEnvelope,
    PowerLogEnvelope,
    envelope_eval,
    mu_exponents,
    phase_S,
    zeta,
)
from rescap.errors import DomainError


def test_power_eval_closed_form():
    env = PowerEnvelope(q=4)
    mu, ell = envelope_eval(env, 16.0)
    assert mu == pytest.approx(0.5, abs=1e-15)
    assert ell == pytest.approx(-1.0 / 64.0, abs=1e-18)


@pytest.mark.parametrize("q", [1, 2, 4])
def test_power_log_derivative_rule(q):
    env = PowerEnvelope(q=q)
    for t in (5.0, 123.0, 1e6):
        assert env.ell(t) == pytest.approx(-1.0 / (q * t), rel=1e-14)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_powerlog_ell_rule(q):
    env = PowerLogEnvelope(q=q)
    t = env.tau0 * 7.3
    expect = -(1.0 - q / math.log(t)) / (q * t)
    assert env.ell(t) == pytest.approx(expect, rel=1e-14)


def test_exponents():
    assert mu_exponents(PowerEnvelope(q=4)) == (4, -0.25)
    assert mu_exponents(PowerEnvelope(q=2)) == (2, -0.5)
    assert mu_exponents(PowerLogEnvelope(q=2)) == (2, 0.0)
    assert mu_exponents(PowerLogEnvelope(q=5)) == (5, 0.0)


@pytest.mark.parametrize(
    "env", [PowerEnvelope(q=4), PowerEnvelope(q=1), PowerLogEnvelope(q=2)]
)
def test_exponent_limits_numerically(env):
    # approach of both (mucond) ratios between the probe times 1e6 and 1e8
    m, chi = env.exponents()
    r1 = [abs(env.ell(t) / env.mu(t) ** m - chi) for t in (1e6, 1e8)]
    r2 = [abs(env.mu(t) ** (m + 1) / env.ell(t)) for t in (1e6, 1e8)]
    assert r1[1] <= max(0.95 * r1[0], 1e-9)
    assert r2[1] <= 0.95 * r2[0]
    assert env.verify_conditions()


def test_mu_strictly_decreasing():
    for env in (PowerEnvelope(q=3), PowerLogEnvelope(q=2)):
        ts = np.linspace(env.tau0, env.tau0 * 50, 60)
        mus = [env.mu(t) for t in ts]
        assert all(b < a for a, b in zip(mus, mus[1:]))


def test_log_derivative_matches_finite_difference():
    for env in (PowerEnvelope(q=4), PowerLogEnvelope(q=2)):
        for t in (env.tau0 * 3, env.tau0 * 40):
            h = 1e-5 * t
            fd = (math.log(env.mu(t + h)) - math.log(env.mu(t - h))) / (2 * h)
            assert env.ell(t) == pytest.approx(fd, rel=1e-6)


def test_powerlog_requires_large_tau0():
    with pytest.raises(DomainError):
        PowerLogEnvelope(q=2, tau0=5.0)
    env = PowerLogEnvelope(q=2)
    assert env.tau0 == pytest.approx(math.exp(2) + 1.0)


def test_zeta_empty_and_h0():
    env = PowerEnvelope(q=4, tau0=1.0)
    assert zeta(env, 3, 10.0, 10.0).value == 0.0
    res = zeta(env, 0, 10.0, 250.0)
    assert res.value == pytest.approx(240.0, abs=1e-12)
    assert res.divergent


def test_zeta_closed_form_power4():
    env = PowerEnvelope(q=4, tau0=1.0)
    res = zeta(env, 2, 16.0, 81.0)
    expect = (4.0 / 3.0) * (81.0**0.75 - 16.0**0.75)
    assert res.value == pytest.approx(expect, rel=1e-14)
    assert res.divergent


def test_zeta_log_case():
    env = PowerEnvelope(q=2, tau0=1.0)  # h = 2q: integrand 1/t
    res = zeta(env, 4, 3.0, 300.0)
    assert res.value == pytest.approx(math.log(100.0), rel=1e-13)
    assert res.divergent


def test_zeta_convergent_flag():
    env = PowerEnvelope(q=2, tau0=1.0)
    assert not zeta(env, 6, 2.0, 100.0).divergent  # t^(-3/2) integrable
    assert zeta(PowerLogEnvelope(q=2), 4, 9.0, 90.0).divergent


def test_zeta_additive_and_monotone():
    for env in (PowerEnvelope(q=4, tau0=1.0), PowerLogEnvelope(q=2)):
        t0 = env.tau0 + 1.0
        t1, t2 = t0 * 4.0, t0 * 19.0
        whole = zeta(env, 3, t0, t2).value
        split = zeta(env, 3, t0, t1).value + zeta(env, 3, t1, t2).value
        assert whole == pytest.approx(split, abs=1e-12 * max(1.0, whole))
        assert zeta(env, 3, t0, t1).value <= whole


def test_zeta_quadrature_matches_closed_form_family():
    # power-log quadrature against the analytic antiderivative of
    # mu^2 = t^(-1) log^2 t (q = 2, h = 4): log^3(t)/3
    env = PowerLogEnvelope(q=2)
    t0, t1 = env.tau0, env.tau0 * 31.0
    got = zeta(env, 4, t0, t1).value
    expect = (math.log(t1) ** 3 - math.log(t0) ** 3) / 3.0
    assert got == pytest.approx(expect, rel=1e-10)


def test_zeta_domain_errors():
    env = PowerEnvelope(q=4, tau0=2.0)
    with pytest.raises(DomainError):
        zeta(env, 2, 5.0, 4.0)
    with pytest.raises(DomainError):
        zeta(env, 2, 1.0, 4.0)
    with pytest.raises(DomainError):
        envelope_eval(env, 1.0)


def test_custom_envelope_verification():
    env = CustomEnvelope(
        mu_fn=lambda t: t**-0.5,
        ell_fn=lambda t: -0.5 / t,
        m=2,
        chi_m=-0.5,
        tau0=1.0,
    )
    assert env.verify_conditions()
    with pytest.raises(DomainError):
        CustomEnvelope(
            mu_fn=lambda t: t**-0.5,
            ell_fn=lambda t: -0.5 / t,
            m=3,  # wrong exponent: ell/mu^3 diverges
            chi_m=0.0,
            tau0=1.0,
        )


def test_phase_linear():
    env = PowerEnvelope(q=2, tau0=1.0)
    ph = PerturbationPhase(s0=1.5, envelope=env)
    assert phase_S(ph, 10.0) == pytest.approx(15.0, abs=1e-14)
    ph2 = PerturbationPhase(s0=0.5, envelope=env)
    for t in (2.0, 37.0):
        assert ph2.S(t) == pytest.approx(t / 2.0, abs=1e-14)


def test_phase_with_envelope_correction():
    env = PowerEnvelope(q=2, tau0=1.0)
    ph = PerturbationPhase(s0=0.7, envelope=env, s=(0.3,), t0=4.0)
    t = 25.0
    expect = 0.7 * t + 0.3 * 2.0 * (math.sqrt(t) - 2.0)
    assert ph.S(t) == pytest.approx(expect, rel=1e-13)
    assert ph.S_prime(t) == pytest.approx(0.7 + 0.3 / math.sqrt(t), rel=1e-13)
    with pytest.raises(DomainError):
        ph.S(3.0)


def test_phase_requires_nonzero_slope():
    with pytest.raises(DomainError):
        PerturbationPhase(s0=0.0, envelope=PowerEnvelope(q=2))
