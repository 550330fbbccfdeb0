import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from darkpolariton.bloch import (
    Scenario,
    adiabatic_initial_state,
    integrate,
    measure_peak_velocity,
    peak_position,
    storage_retrieval_fidelity,
)
from darkpolariton.errors import (
    ConfigError,
    DomainOverflowError,
    GridMismatchError,
    UnsupportedRegimeError,
    ZeroNormError,
)
from darkpolariton.medium import ControlSchedule, Grid, MediumParams, theta_at
from darkpolariton.polariton import FieldState, PolaritonProfile


def gaussian(z, centre=0.0, width=5.0):
    return np.exp(-((z - centre) / width) ** 2)


def adiabatic_scenario(params, schedule, grid, width=5.0, amplitude=0.01, **kw):
    z = grid.z
    cos0 = math.cos(theta_at(schedule, params, grid.t_min))
    prof = PolaritonProfile(grid.t_min, z, amplitude * gaussian(z, 0.0, width) / cos0)
    return Scenario(params, schedule, grid, adiabatic_initial_state(prof, schedule, params), **kw)


def bare_state(grid, E=None, S=None):
    z = grid.z
    zero = np.zeros_like(z)
    return FieldState(grid.t_min, z, zero if E is None else E, zero, zero if S is None else S)


@pytest.mark.parametrize("method", ["spectral", "split"])
def test_free_propagation_is_an_exact_shift(method):
    grid = Grid(-30.0, 70.0, 401, 0.0, 37.5, 150)
    params = MediumParams(g_root_N=0.0)
    state = bare_state(grid, E=gaussian(grid.z, 0.0, 3.0))
    traj = integrate(Scenario(params, ControlSchedule.constant(1.0), grid, state, record_every=50), method)
    np.testing.assert_allclose(traj.final.E, gaussian(grid.z, 37.5, 3.0), atol=1e-10)
    assert traj.times[-1] == pytest.approx(37.5)


@pytest.mark.parametrize("method", ["spectral", "split"])
def test_lossless_run_conserves_excitation(method):
    grid = Grid(-30.0, 70.0, 2001, 0.0, 40.0, 800)
    params = MediumParams(g_root_N=2.0)
    traj = integrate(adiabatic_scenario(params, ControlSchedule.tanh_pair(1.0, 0.3, 10.0, 25.0), grid,
                                        record_every=100), method)
    np.testing.assert_allclose(traj.excitation, traj.excitation[0], rtol=1e-7)


def test_schemes_agree():
    grid = Grid(-30.0, 70.0, 2001, 0.0, 40.0, 800)
    params = MediumParams(g_root_N=2.0, gamma_ab=0.5)
    scen = adiabatic_scenario(params, ControlSchedule.tanh_pair(1.0, 0.3, 10.0, 25.0), grid, record_every=800)
    a = integrate(scen, "spectral").final
    b = integrate(scen, "split").final
    for x, y in ((a.E, b.E), (a.sigma_bc, b.sigma_bc), (a.sigma_ba, b.sigma_ba)):
        assert np.linalg.norm(x - y) < 2e-3 * np.linalg.norm(a.sigma_bc)


def test_peak_moves_at_slow_light_velocity():
    grid = Grid(-30.0, 100.0, 521, 0.0, 120.0, 600)
    params = MediumParams(g_root_N=2.0)
    traj = integrate(adiabatic_scenario(params, ControlSchedule.constant(2.0), grid, record_every=50))
    # finite-bandwidth dispersion shifts the peak by O((c / (G w))^2) ~ 1%
    assert measure_peak_velocity(traj, (20.0, 120.0)) == pytest.approx(0.5, rel=1e-2)
    assert measure_peak_velocity(traj, (20.0, 120.0), "psi") == pytest.approx(0.5, rel=1e-2)


def test_ground_state_dephasing_during_storage():
    grid = Grid(-30.0, 30.0, 241, 0.0, 10.0, 20)
    params = MediumParams(g_root_N=1.0, gamma_bc=0.05)
    state = bare_state(grid, S=0.01 * gaussian(grid.z))
    traj = integrate(Scenario(params, ControlSchedule.constant(0.0), grid, state, record_every=20))
    assert traj.excitation[-1] / traj.excitation[0] == pytest.approx(math.exp(-2 * 0.05 * 10.0), rel=1e-12)
    np.testing.assert_allclose(traj.final.E, 0.0, atol=1e-16)


def test_split_scheme_accepts_boundary_inflow():
    grid = Grid(0.0, 40.0, 401, 0.0, 30.0, 300)
    params = MediumParams(g_root_N=0.0)
    inflow = lambda t: math.exp(-((t - 10.0) / 2.0) ** 2)
    traj = integrate(Scenario(params, ControlSchedule.constant(1.0), grid, bare_state(grid),
                              record_every=300, inflow=inflow), "split")
    np.testing.assert_allclose(traj.final.E, gaussian(grid.z, 20.0, 2.0), atol=1e-10)


def test_split_scheme_reports_transmitted_energy():
    grid = Grid(0.0, 40.0, 401, 0.0, 40.0, 400)
    params = MediumParams(g_root_N=0.0)
    state = bare_state(grid, E=gaussian(grid.z, 20.0, 2.0))
    traj = integrate(Scenario(params, ControlSchedule.constant(1.0), grid, state, record_every=400), "split")
    assert traj.transmitted[-1] == pytest.approx(state.excitation, rel=1e-9)


def test_spectral_scheme_limits():
    grid = Grid(-30.0, 30.0, 241, 0.0, 10.0, 20)
    params = MediumParams(g_root_N=1.0)
    state = bare_state(grid, E=0.01 * gaussian(grid.z))
    with pytest.raises(UnsupportedRegimeError):
        integrate(Scenario(params, ControlSchedule.constant(1.0, retarded=True), grid, state))
    with pytest.raises(UnsupportedRegimeError):
        integrate(Scenario(params, ControlSchedule.constant(1.0), grid, state, inflow=lambda t: 0.0))
    with pytest.raises(ConfigError):
        integrate(Scenario(params, ControlSchedule.constant(1.0), grid, state), "euler")


def test_pulse_reaching_the_edge_is_reported():
    grid = Grid(-30.0, 30.0, 241, 0.0, 40.0, 80)
    state = bare_state(grid, E=gaussian(grid.z, 0.0, 3.0))
    with pytest.raises(DomainOverflowError):
        integrate(Scenario(MediumParams(g_root_N=0.0), ControlSchedule.constant(1.0), grid, state))


def test_split_scheme_requires_aligned_grid():
    grid = Grid(-30.0, 30.0, 241, 0.0, 10.0, 20)
    state = bare_state(grid, E=0.01 * gaussian(grid.z))
    with pytest.raises(ConfigError):
        integrate(Scenario(MediumParams(g_root_N=1.0), ControlSchedule.constant(1.0), grid, state), "split")


def test_scenario_validation():
    grid = Grid(-30.0, 30.0, 241, 0.0, 10.0, 20)
    params = MediumParams(g_root_N=1.0)
    sched = ControlSchedule.constant(1.0)
    with pytest.raises(GridMismatchError):
        Scenario(params, sched, grid, FieldState(0.0, np.linspace(-1, 1, 241), *[np.zeros(241)] * 3))
    with pytest.raises(ConfigError):
        Scenario(params, sched, grid, FieldState(1.0, grid.z, *[np.zeros(241)] * 3))
    with pytest.raises(ConfigError):
        Scenario(params, sched, grid, bare_state(grid, E=gaussian(grid.z)))
    Scenario(params, sched, grid, bare_state(grid, E=gaussian(grid.z)), allow_strong_probe=True)
    with pytest.raises(ConfigError):
        Scenario(params, sched, grid, bare_state(grid), record_every=0)


def test_adiabatic_initial_state_coherence_for_constant_control():
    grid = Grid(-30.0, 30.0, 601, 0.0, 1.0, 1)
    params = MediumParams(g_root_N=2.0)
    sched = ControlSchedule.constant(1.0)
    psi = gaussian(grid.z)
    state = adiabatic_initial_state(PolaritonProfile(0.0, grid.z, psi), sched, params)
    theta = math.atan2(2.0, 1.0)
    v = math.cos(theta) ** 2
    dpsi = -2 * grid.z / 25.0 * psi
    expected = -1j * (-math.sin(theta) * (-v * dpsi)) / 1.0
    np.testing.assert_allclose(state.sigma_ba, expected, atol=2e-3 * np.abs(expected).max())  # centred differences


def test_peak_position_refinement():
    z = np.linspace(0, 10, 11)
    assert peak_position(z, -(z - 4.3) ** 2 + 30) == pytest.approx(4.3, abs=1e-12)
    assert peak_position(z, z) is None
    assert peak_position(z, np.zeros(11)) is None


def test_fidelity_of_identical_and_shifted_profiles():
    z = np.linspace(-50, 50, 1001)
    e = gaussian(z, 0.0, 5.0)
    same = storage_retrieval_fidelity(e, e, z)
    assert same.fidelity == pytest.approx(1.0, abs=1e-14) and same.energy_ratio == pytest.approx(1.0)
    moved = storage_retrieval_fidelity(e, 0.5 * gaussian(z, 7.3, 5.0), z)
    assert moved.fidelity == pytest.approx(1.0, abs=1e-10)
    assert moved.shift == pytest.approx(7.3, abs=1e-9)
    assert moved.energy_ratio == pytest.approx(0.25, rel=1e-9)


@given(st.floats(0, 2 * np.pi), st.floats(-10, 10))
def test_fidelity_ignores_global_phase_and_position(phase, shift):
    z = np.linspace(-60, 60, 1201)
    e = gaussian(z, 0.0, 5.0) * np.exp(0.2j * z)
    out = np.exp(1j * phase) * gaussian(z, shift, 5.0) * np.exp(0.2j * (z - shift))
    assert storage_retrieval_fidelity(e, out, z).fidelity == pytest.approx(1.0, abs=1e-9)


def test_fidelity_penalises_shape_change_and_handles_other_grids():
    z = np.linspace(-50, 50, 1001)
    e = gaussian(z, 0.0, 5.0)
    wide = storage_retrieval_fidelity(e, gaussian(z, 0.0, 10.0), z)
    assert wide.fidelity == pytest.approx(0.8, rel=1e-9)  # 2 w1 w2 / (w1^2 + w2^2)
    z2 = np.linspace(-40, 60, 777)
    other = storage_retrieval_fidelity(e, gaussian(z2, 3.0, 5.0), z, z2)
    assert other.fidelity == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ZeroNormError):
        storage_retrieval_fidelity(0 * e, e, z)
    assert storage_retrieval_fidelity(e, 0 * e, z).fidelity == 0.0


@pytest.mark.parametrize("method, sizes, minimum", [
    ("spectral", (100, 200, 400), 3.9),
    # Strang splitting: the three-level estimate approaches 2 from below
    ("split", (400, 800, 1600), 1.99),
])
def test_observed_order_of_convergence(method, sizes, minimum):
    # grid-independent initial data so only the time stepping is refined
    params = MediumParams(g_root_N=2.0, gamma_ab=0.5)
    sched = ControlSchedule.tanh_pair(1.0, 0.3, 10.0, 25.0)
    theta0 = theta_at(sched, params, 0.0)
    finals = []
    for n in sizes:
        grid = Grid(-30.0, 70.0, 10 * n // 4 + 1, 0.0, 40.0, n)
        E = 0.01 * gaussian(grid.z)
        state = FieldState(0.0, grid.z, E, 0 * E, -math.tan(theta0) * E)
        finals.append(integrate(Scenario(params, sched, grid, state, record_every=n), method).final)
    for part in ("E", "sigma_bc"):
        a, b, c = (getattr(s, part) for s in finals)
        order = math.log2(np.max(np.abs(a - b[::2])) / np.max(np.abs(b[::2] - c[::4])))
        assert order >= minimum
