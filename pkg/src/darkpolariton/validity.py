"""Size of the approximations behind adiabatic polariton transport.

Thresholds used for the qualitative labels (the 10/100 bands of the
adiabaticity figure and the 0.1 safety factor on the storage time) are
reporting conventions of this package, not physical constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateControlError, InsufficientDataError, UndefinedResidualError
from .medium import ControlSchedule, MediumParams, omega_at, omega_floor
from .polariton import FieldState

__all__ = [
    "first_correction",
    "z_max",
    "AdiabaticityFigure",
    "adiabaticity_figure",
    "StorageBound",
    "storage_bound",
    "excitation_count",
    "intensity_ratio_residual",
    "UNBOUNDED",
]

#: Returned where a bound does not exist (zero decay rate).
UNBOUNDED = math.inf

POOR_BELOW = 10.0
GOOD_ABOVE = 100.0
USABLE_STORAGE_FRACTION = 0.1


def _support(*arrays, rel=1e-8):
    mag = np.max([np.abs(a) for a in arrays], axis=0)
    peak = float(mag.max())
    return mag >= rel * peak if peak > 0 else np.zeros(mag.shape, bool)


def first_correction(states: Sequence[FieldState], schedule: ControlSchedule,
                     params: MediumParams, dt: float) -> np.ndarray:
    """First non-adiabatic correction to the (sqrt(N)-scaled) Raman coherence.

    Evaluates ``(1/Omega)(d/dt + gamma_ab)(1/Omega) d/dt (G E / Omega)`` at the
    time of the middle of three consecutive snapshots spaced by ``dt``, using
    centred differences (second order in ``dt``).
    """
    if len(states) < 3:
        raise InsufficientDataError(f"need three consecutive snapshots, got {len(states)}")
    before, centre, after = states[0], states[1], states[2]
    z, t = centre.z, centre.t
    G = params.g_root_N

    def om(time):
        return np.broadcast_to(np.asarray(omega_at(schedule, params, time, z), dtype=float), z.shape)

    omegas = [om(t - dt), om(t - 0.5 * dt), om(t), om(t + 0.5 * dt), om(t + dt)]
    support = _support(before.E, centre.E, after.E)
    floor = omega_floor(params)
    if any(np.any(w[support] < floor) or np.any(w[support] == 0) for w in omegas):
        raise DegenerateControlError("Omega below floor on the pulse support")

    safe = [np.where(w > 0, w, 1.0) for w in omegas]
    f_prev = G * before.E / safe[0]
    f_mid = G * centre.E / safe[2]
    f_next = G * after.E / safe[4]
    h_minus = (f_mid - f_prev) / (dt * safe[1])
    h_plus = (f_next - f_mid) / (dt * safe[3])
    correction = ((h_plus - h_minus) / dt + params.gamma_ab * 0.5 * (h_plus + h_minus)) / safe[2]
    return np.where(support, correction, 0.0)


def z_max(params: MediumParams, L_p: float) -> float:
    """Propagation distance below which non-adiabatic spreading is small.

    ``(g^2 N / gamma_ab) * L_p^2 / c``; :data:`UNBOUNDED` when gamma_ab = 0.
    """
    if params.gamma_ab == 0:
        return UNBOUNDED
    return params.coupling_sq / params.gamma_ab * L_p**2 / params.c


@dataclass(frozen=True)
class AdiabaticityFigure:
    value: float
    flag: str


def adiabaticity_figure(params: MediumParams, L_p: float) -> AdiabaticityFigure:
    """``g^2 N L_p / (c gamma_ab)`` with a label: poor (< 10), marginal, good (> 100)."""
    if params.gamma_ab == 0:
        value = UNBOUNDED
    else:
        value = params.coupling_sq * L_p / (params.c * params.gamma_ab)
    if value < POOR_BELOW:
        flag = "poor"
    elif value > GOOD_ABOVE:
        flag = "good"
    else:
        flag = "marginal"
    return AdiabaticityFigure(value, flag)


@dataclass(frozen=True)
class StorageBound:
    hard: float
    usable: float


def storage_bound(params: MediumParams, n_e: int) -> StorageBound:
    """Collective dephasing time ``1/(gamma_bc n_e)``; usable storage is a tenth of it."""
    if n_e < 1:
        raise ValueError(f"excitation count must be >= 1, got {n_e}")
    if params.gamma_bc == 0:
        return StorageBound(UNBOUNDED, UNBOUNDED)
    hard = 1.0 / (params.gamma_bc * n_e)
    return StorageBound(hard, USABLE_STORAGE_FRACTION * hard)


def excitation_count(state: FieldState) -> int:
    """Atomic excitation proxy: ``int |S|^2 dz`` rounded up."""
    return int(math.ceil(np.trapezoid(np.abs(state.sigma_bc) ** 2, state.z) - 1e-12))


def intensity_ratio_residual(state: FieldState, omega, params: MediumParams) -> float:
    """Normalised violation of ``G^2 |E|^2 / Omega^2 = |S|^2``.

    ``max |G^2|E|^2/Omega^2 - |S|^2| / max |S|^2`` over the pulse support.
    ``omega`` may be a scalar or a profile on the state's grid.
    """
    omega = np.broadcast_to(np.asarray(omega, dtype=float), state.z.shape)
    support = _support(state.E, state.sigma_bc)
    if np.any(omega[support] < omega_floor(params)) or np.any(omega[support] == 0):
        raise DegenerateControlError("Omega below floor on the pulse support")
    norm = float(np.max(np.abs(state.sigma_bc[support]) ** 2)) if np.any(support) else 0.0
    if norm == 0:
        raise UndefinedResidualError("matter component vanishes; residual undefined")
    lhs = params.coupling_sq * np.abs(state.E[support]) ** 2 / omega[support] ** 2
    rhs = np.abs(state.sigma_bc[support]) ** 2
    return float(np.max(np.abs(lhs - rhs)) / norm)
