import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from darkpolariton.errors import DegenerateControlError, InsufficientDataError, UndefinedResidualError
from darkpolariton.medium import ControlSchedule, MediumParams
from darkpolariton.polariton import FieldState
from darkpolariton.validity import (
    UNBOUNDED,
    adiabaticity_figure,
    excitation_count,
    first_correction,
    intensity_ratio_residual,
    storage_bound,
    z_max,
)

Z = np.linspace(-10, 10, 201)
ENVELOPE = np.exp(-(Z / 3) ** 2)


def field_states(f, t, dt):
    return [FieldState(t + k * dt, Z, f(t + k * dt) * ENVELOPE, 0 * Z, 0 * Z) for k in (-1, 0, 1)]


def symbolic_correction(G, gamma, t0):
    """(1/W)(d/dt + gamma)(1/W) d/dt (G f / W) for f = sin t and W = G cot(theta(t))."""
    t = sp.symbols("t")
    W = G * 2 * (1 - sp.tanh(sp.Rational(1, 2) * (t - 3)) / 2 + sp.tanh(sp.Rational(1, 2) * (t - 20)) / 2)
    inner = sp.diff(G * sp.sin(t) / W, t) / W
    expr = (sp.diff(inner, t) + gamma * inner) / W
    return float(expr.subs(t, t0))


def test_first_correction_matches_symbolic_derivative():
    params = MediumParams(g_root_N=2.0, gamma_ab=0.7)
    sched = ControlSchedule.tanh_pair(2.0, 0.5, 3.0, 20.0)
    expected = symbolic_correction(2.0, 0.7, 4.0)
    errors = []
    for dt in (1e-2, 5e-3):
        corr = first_correction(field_states(np.sin, 4.0, dt), sched, params, dt)
        np.testing.assert_allclose(corr, expected * ENVELOPE, rtol=0, atol=1e-3 * abs(expected))
        errors.append(np.max(np.abs(corr - expected * ENVELOPE)))
    assert errors[1] < errors[0] / 3  # second order in dt


def test_first_correction_for_constant_control():
    G, W, gamma = 3.0, 1.5, 0.4
    params = MediumParams(g_root_N=G, gamma_ab=gamma)
    corr = first_correction(field_states(np.cos, 1.0, 1e-3), ControlSchedule.constant(W), params, 1e-3)
    expected = G / W**3 * (-math.cos(1.0) - gamma * math.sin(1.0))
    np.testing.assert_allclose(corr, expected * ENVELOPE, atol=1e-6)


def test_first_correction_errors():
    params = MediumParams(g_root_N=1.0)
    states = field_states(np.sin, 1.0, 0.1)
    with pytest.raises(InsufficientDataError):
        first_correction(states[:2], ControlSchedule.constant(1.0), params, 0.1)
    with pytest.raises(DegenerateControlError):
        first_correction(states, ControlSchedule.constant(0.0), params, 0.1)


def test_z_max_and_figure_values():
    p = MediumParams(g_root_N=10.0, gamma_ab=1.0)
    assert z_max(p, 10.0) == pytest.approx(1e4)
    assert z_max(MediumParams(g_root_N=10.0), 10.0) == UNBOUNDED
    assert adiabaticity_figure(MediumParams(g_root_N=100.0, gamma_ab=1.0), 10.0).value == pytest.approx(1e5)
    assert adiabaticity_figure(p, 10.0).flag == "good"
    assert adiabaticity_figure(p, 0.5).flag == "marginal"
    assert adiabaticity_figure(MediumParams(g_root_N=1.0, gamma_ab=1.0), 1.0).flag == "poor"
    assert adiabaticity_figure(MediumParams(g_root_N=1.0), 1.0).value == UNBOUNDED


@given(st.floats(0.1, 100), st.floats(0.1, 10), st.floats(0.1, 100))
def test_z_max_is_quadratic_in_pulse_length(G, gamma, L):
    p = MediumParams(g_root_N=G, gamma_ab=gamma)
    assert z_max(p, 2 * L) == pytest.approx(4 * z_max(p, L), rel=1e-12)
    assert adiabaticity_figure(p, L).value * L == pytest.approx(z_max(p, L), rel=1e-12)


def test_storage_bound():
    b = storage_bound(MediumParams(g_root_N=1.0, gamma_bc=0.01), 5)
    assert b.hard == pytest.approx(20.0) and b.usable == pytest.approx(2.0)
    assert storage_bound(MediumParams(g_root_N=1.0), 3).hard == UNBOUNDED
    with pytest.raises(ValueError):
        storage_bound(MediumParams(g_root_N=1.0), 0)


def test_excitation_count_rounds_up():
    z = np.linspace(-20, 20, 4001)
    S = np.sqrt(2.5 / np.sqrt(np.pi)) * np.exp(-(z**2) / 2)  # integral of |S|^2 = 2.5
    assert excitation_count(FieldState(0.0, z, 0 * z, 0 * z, S)) == 3


def test_intensity_ratio_residual_on_adiabatic_state():
    G, W = 2.0, 0.5
    params = MediumParams(g_root_N=G)
    theta = math.atan2(G, W)
    psi = ENVELOPE
    state = FieldState(0.0, Z, math.cos(theta) * psi, 0 * Z, -math.sin(theta) * psi)
    assert intensity_ratio_residual(state, W, params) < 1e-14
    bent = FieldState(0.0, Z, 1.1 * math.cos(theta) * psi, 0 * Z, -math.sin(theta) * psi)
    assert intensity_ratio_residual(bent, W, params) == pytest.approx(0.21, rel=1e-9)


def test_intensity_ratio_residual_errors():
    params = MediumParams(g_root_N=1.0)
    photon_only = FieldState(0.0, Z, ENVELOPE, 0 * Z, 0 * Z)
    with pytest.raises(UndefinedResidualError):
        intensity_ratio_residual(photon_only, 1.0, params)
    with pytest.raises(DegenerateControlError):
        intensity_ratio_residual(FieldState(0.0, Z, 0 * Z, 0 * Z, ENVELOPE), 0.0, params)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10),
       st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.2, 5))
def test_validity_scales_are_homogeneous(G, gamma, c, L, a, b, k, s):
    base = MediumParams(g_root_N=G, gamma_ab=gamma, c=c)
    scaled = MediumParams(g_root_N=a * G, gamma_ab=b * gamma, c=k * c)
    factor = a**2 / (b * k)
    assert z_max(scaled, s * L) == pytest.approx(factor * s**2 * z_max(base, L), rel=1e-12)
    assert adiabaticity_figure(scaled, s * L).value == pytest.approx(
        factor * s * adiabaticity_figure(base, L).value, rel=1e-12)


def test_first_correction_decays_quadratically_with_ramp_time():
    # E = f(z - z0(t)) with z0 = 4 sin(t / T): every time derivative brings 1/T
    params = MediumParams(g_root_N=2.0)
    sched = ControlSchedule.constant(1.5)

    def peak_correction(T):
        t, dt = 0.3 * T, 1e-3 * T
        states = [FieldState(t + k * dt, Z, np.exp(-((Z - 4 * np.sin((t + k * dt) / T)) / 3) ** 2),
                             0 * Z, 0 * Z) for k in (-1, 0, 1)]
        return np.max(np.abs(first_correction(states, sched, params, dt)))

    sizes = [peak_correction(T) for T in (10.0, 31.6227766, 100.0)]
    assert sizes[0] / sizes[2] == pytest.approx(100.0, rel=1e-3)
    assert sizes[0] > sizes[1] > sizes[2]
