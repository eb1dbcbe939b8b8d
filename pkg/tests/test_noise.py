import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slogs.errors import ConfigurationError, ParameterError
from slogs.grid import ComplexField, Grid
from slogs.noise import (GFamily, GKind, NoiseCase, NoiseModel, NoiseSpec, NoiseStream,
                         Spectrum, diffusion_apply, g_constants, g_eval, g_prime, ito_correction,
                         sample_increment)

REAL = NoiseCase.MULTIPLICATIVE_REAL
CPLX = NoiseCase.MULTIPLICATIVE_COMPLEX
ADD = NoiseCase.ADDITIVE


def test_spec_validation():
    with pytest.raises(ParameterError):
        Spectrum(decay=1.0)
    with pytest.raises(ParameterError):
        Spectrum(amplitude=-1)
    with pytest.raises(ParameterError):
        GKind(GFamily.RATIONAL, 0.0)
    with pytest.raises(ConfigurationError):
        NoiseSpec(CPLX, g=GKind(GFamily.SUPER_LOG))
    with pytest.raises(ConfigurationError):
        NoiseSpec(ADD, g=GKind(GFamily.SUPER_LOG))
    NoiseSpec(REAL, g=GKind(GFamily.SUPER_LOG))


def test_cutoff_limits():
    g = Grid(1, 1.0, 16)
    with pytest.raises(ConfigurationError):
        NoiseModel(NoiseSpec(ADD, Spectrum(2, 1, 8)), g)
    with pytest.raises(ConfigurationError):
        NoiseModel(NoiseSpec(ADD, Spectrum(2, 1, 16)), Grid(1, 1.0, 16, "dirichlet"))


def test_increment_requires_positive_dt(torus):
    spec = NoiseSpec(ADD, Spectrum(2, 1.0, 4))
    for dt in (0.0, -1e-3):
        with pytest.raises(ParameterError):
            sample_increment(spec, torus, dt, NoiseStream(0, 0))


def test_increment_vanishes_with_dt(torus):
    spec = NoiseSpec(ADD, Spectrum(2, 1.0, 4))
    dw = sample_increment(spec, torus, 1e-300, NoiseStream(0, 0))
    assert np.max(np.abs(dw.values)) < 1e-140


def test_real_case_has_real_increments():
    for g in (Grid(1, 10.0, 64), Grid(2, 10.0, 16), Grid(1, 10.0, 64, "dirichlet")):
        m = NoiseModel(NoiseSpec(REAL, Spectrum(2, 1.0, 5)), g)
        for s in range(5):
            assert np.max(np.abs(m.increment(0.1, NoiseStream(3, s)).imag)) == 0.0


def test_constant_mode_second_moment():
    L, dt, n = 3.0, 0.01, 100_000
    g = Grid(1, L, 16)
    m = NoiseModel(NoiseSpec(ADD, Spectrum(2.0, 1.0, 0)), g)
    assert m.n_modes == 1 and m.q[0] == 1.0
    dw = m.increments(dt, 11, np.arange(n), 0)
    norm2 = g.l2sq(dw)
    # ||dW||^2 = dt |xi|^2 with |xi|^2 ~ Exp(1): mean dt, variance dt^2
    assert abs(norm2.mean() - dt) < 3 * dt / np.sqrt(n)
    assert abs(norm2.var() - dt ** 2) < 3 * np.sqrt(8.0 / n) * dt ** 2
    # constant value dW = sqrt(dt) xi / sqrt(L)
    assert np.allclose(dw, dw[:, :1])


@pytest.mark.parametrize("case", [ADD, REAL])
def test_coefficient_covariance(case):
    g = Grid(1, 2 * np.pi, 32)
    m = NoiseModel(NoiseSpec(case, Spectrum(1.5, 2.0, 2)), g)
    dt, n = 0.05, 100_000
    xi = np.stack([m.coefficients(dt, NoiseStream(5, s)) for s in range(n)]) * m.sqrt_q
    cov = (xi.T @ xi.conj()) / n
    target = np.diag(m.q * dt)
    # per-entry standard error of E[c_j conj(c_k)] is at most sqrt(q_j q_k) dt sqrt(2/n)
    se = np.sqrt(np.outer(m.q, m.q)) * dt * np.sqrt(2.0 / n)
    assert np.all(np.abs(cov - target) <= 5 * se)
    if case is ADD:
        pseudo = (xi.T @ xi) / n
        assert np.all(np.abs(pseudo) <= 5 * se)


def test_expected_norm_matches_trace():
    g = Grid(1, 8.0, 64)
    m = NoiseModel(NoiseSpec(CPLX, Spectrum(2.0, 1.0, 6)), g)
    dt, n = 0.01, 20_000
    norms = g.l2sq(m.increments(dt, 2, np.arange(n), 0))
    assert abs(norms.mean() - dt * m.trace) < 4 * norms.std() / np.sqrt(n)


def test_stream_reproducibility(torus):
    m = NoiseModel(NoiseSpec(ADD, Spectrum(2, 1.0, 8)), torus)
    a = m.increment(0.1, NoiseStream(42, 3, 17))
    b = m.increment(0.1, NoiseStream(42, 3).advance(17))
    assert np.array_equal(a, b)
    batch = m.increments(0.1, 42, [5, 3, 9], 17)
    assert np.array_equal(batch[1], a)
    assert not np.array_equal(batch[0], a)


def test_substeps_aggregate_fine_increments(torus):
    m = NoiseModel(NoiseSpec(ADD, Spectrum(2, 1.0, 8)), torus)
    coarse = m.increment(0.2, NoiseStream(1, 0, 3), substeps=2)
    fine = m.increment(0.1, NoiseStream(1, 0, 6)) + m.increment(0.1, NoiseStream(1, 0, 7))
    assert np.allclose(coarse, fine, atol=1e-15)


def test_g_examples():
    one = GKind(GFamily.ONE)
    x = np.linspace(0, 10, 11)
    assert np.all(g_eval(x, one) == 1) and np.all(g_prime(x, one) == 0)
    rat = GKind(GFamily.RATIONAL, 1.0)
    assert g_eval(1.0, rat) == 0.5 and g_prime(1.0, rat) == 0.25
    sl = GKind(GFamily.SUPER_LOG, 1.0)
    assert g_eval(0.0, sl) == 0.0
    assert sl.constants["sup_gprime_x"] == pytest.approx(1.0, rel=1e-9)
    assert not sl.bounded and rat.bounded


@pytest.mark.parametrize("family", list(GFamily))
def test_g_prime_central_difference(family):
    g = GKind(family, 0.7)
    x = np.logspace(-3, 3, 300)
    h = 1e-6 * x
    fd = (g.value(x + h) - g.value(x - h)) / (2 * h)
    fd2 = (g.prime(x + h) - g.prime(x - h)) / (2 * h)
    gv, g1, g2 = np.abs(g.value(x)), np.abs(g.prime(x)), np.abs(g.second(x))
    assert np.all(np.abs(g.prime(x) - fd) <= 1e-6 * (g1 + gv / x))
    assert np.all(np.abs(g.second(x) - fd2) <= 1e-5 * (g2 + g1 / x + gv / x ** 2))


def test_g_constants_closed_forms():
    # rational: sup g' x = 1/4 at x = c; con_g reaches 1 as x, y grow
    c = g_constants(GFamily.RATIONAL, 1.0)
    assert c["sup_gprime_x"] == pytest.approx(0.25, rel=1e-9)
    assert c["con_g"] == pytest.approx(1.0, rel=1e-6)
    assert c["growth"] == pytest.approx(1.25, rel=1e-9)
    assert g_constants(GFamily.ONE, 1.0)["C_g"] == pytest.approx(1.0, rel=1e-5)


def test_correction_single_constant_mode():
    L, q0 = 3.0, 0.8
    g = Grid(1, L, 16)
    u = ComplexField(g, np.exp(1j * g.x) * (1 + 0.1 * g.x))
    for case in (REAL, CPLX):
        spec = NoiseSpec(case, Spectrum(2.0, q0, 0), GKind(GFamily.ONE))
        corr = ito_correction(u, spec).values
        assert np.allclose(corr, -0.5 * q0 / L * u.values, rtol=1e-13, atol=0)
    add = NoiseSpec(ADD, Spectrum(2.0, q0, 0))
    assert np.all(ito_correction(u, add).values == 0)


def test_correction_complex_term():
    # with the standard complex normal, sum Im(Q^1/2 e) Q^1/2 e = i q0 / (2L) on one constant mode
    L, q0 = 2.0, 0.6
    g = Grid(1, L, 16)
    kind = GKind(GFamily.RATIONAL, 1.0)
    u = ComplexField(g, 0.5 + 0.3j * np.cos(np.pi * g.x))
    rho = np.abs(u.values) ** 2
    corr = ito_correction(u, NoiseSpec(CPLX, Spectrum(2.0, q0, 0), kind)).values
    gv, gp = kind.value(rho), kind.prime(rho)
    expect = -0.5 * q0 / L * gv * gv * u.values + gv * gp * rho * u.values * q0 / (2 * L)
    assert np.allclose(corr, expect, rtol=1e-13, atol=1e-16)


def test_diffusion_examples(torus, rng):
    dw = ComplexField(torus, rng.normal(size=64) + 1j * rng.normal(size=64))
    u = ComplexField(torus, rng.normal(size=64) + 1j * rng.normal(size=64))
    add = NoiseSpec(ADD)
    assert np.array_equal(diffusion_apply(u, add, dw).values, dw.values)
    mul = NoiseSpec(CPLX, g=GKind(GFamily.ONE))
    assert np.all(diffusion_apply(ComplexField.zeros(torus), mul, dw).values == 0)
    out = diffusion_apply(u, mul, dw).values
    assert np.allclose(np.abs(out), np.abs(u.values) * np.abs(dw.values), rtol=1e-14)


def test_h1_trace_tail():
    g = Grid(1, 2 * np.pi, 256)
    smooth = NoiseModel(NoiseSpec(ADD, Spectrum(4.0, 1.0, 16)), g)
    assert smooth.h1_trace_tail() < 1e-2
    rough = NoiseModel(NoiseSpec(ADD, Spectrum(1.5, 1.0, 2)), g)
    assert rough.h1_trace_tail() > 0.1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 63), sample=st.integers(0, 2 ** 32), step=st.integers(0, 10 ** 6))
def test_counter_streams_are_pure(seed, sample, step):
    g = Grid(1, 1.0, 16)
    m = NoiseModel(NoiseSpec(REAL, Spectrum(2, 1.0, 3)), g)
    s = NoiseStream(seed, sample, step)
    assert np.array_equal(m.increment(0.01, s), m.increment(0.01, s))
