"""Dark-state-polariton transformation between field/coherence pairs and Psi.

Atomic coherences are carried scaled by the square root of the atom number,
``S = sqrt(N) * sigma_bc`` and ``S_a = sqrt(N) * sigma_ba``, so that only the
collective coupling ``g_root_N`` ever enters. In this convention the polariton
is ``Psi = cos(theta) E - sin(theta) S``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateControlError, GridMismatchError

__all__ = ["FieldState", "PolaritonProfile", "to_polariton", "from_polariton", "polariton_norm"]


def _frozen_array(x, dtype=complex):
    arr = np.array(x, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FieldState:
    """Semiclassical envelopes at one instant.

    ``sigma_ba`` and ``sigma_bc`` hold the sqrt(N)-scaled optical and Raman
    coherences.
    """

    t: float
    z: np.ndarray
    E: np.ndarray
    sigma_ba: np.ndarray
    sigma_bc: np.ndarray

    def __post_init__(self):
        z = _frozen_array(self.z, float)
        object.__setattr__(self, "z", z)
        for name in ("E", "sigma_ba", "sigma_bc"):
            arr = _frozen_array(getattr(self, name))
            if arr.shape != z.shape:
                raise GridMismatchError(f"{name} has shape {arr.shape}, grid has {z.shape}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", float(self.t))

    @property
    def excitation(self) -> float:
        """Integral of |E|^2 + |S_a|^2 + |S|^2 over the grid."""
        dens = np.abs(self.E) ** 2 + np.abs(self.sigma_ba) ** 2 + np.abs(self.sigma_bc) ** 2
        return float(np.trapezoid(dens, self.z))


@dataclass(frozen=True, eq=False)
class PolaritonProfile:
    """Complex polariton amplitude Psi(z) at time ``t``."""

    t: float
    z: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        z = _frozen_array(self.z, float)
        psi = _frozen_array(self.psi)
        if psi.shape != z.shape:
            raise GridMismatchError(f"psi has shape {psi.shape}, grid has {z.shape}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "t", float(self.t))


def _angle_on_grid(theta, z):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim and theta.shape != z.shape:
        raise GridMismatchError(f"theta has shape {theta.shape}, grid has {z.shape}")
    return theta


def to_polariton(state: FieldState, theta) -> PolaritonProfile:
    """Psi = cos(theta) E - sin(theta) S. ``theta`` may vary along the grid."""
    theta = _angle_on_grid(theta, state.z)
    psi = np.cos(theta) * state.E - np.sin(theta) * state.sigma_bc
    return PolaritonProfile(state.t, state.z, psi)


def from_polariton(profile: PolaritonProfile, theta, omega=None, dS_dt=None) -> FieldState:
    """Field and matter components on the adiabatic branch.

    Returns ``E = cos(theta) Psi`` and ``S = -sin(theta) Psi``. The optical
    coherence is zero unless ``dS_dt`` is given, in which case the first-order
    relation ``S_a = -(i / Omega) dS/dt`` is used (``omega`` required and must
    be strictly positive wherever ``dS_dt`` is nonzero).
    """
    theta = _angle_on_grid(theta, profile.z)
    E = np.cos(theta) * profile.psi
    S = -np.sin(theta) * profile.psi
    if dS_dt is None:
        Sa = np.zeros_like(profile.psi)
    else:
        if omega is None:
            raise ValueError("omega is required to reconstruct sigma_ba from dS_dt")
        dS_dt = np.broadcast_to(np.asarray(dS_dt, dtype=complex), profile.z.shape)
        omega = np.broadcast_to(np.asarray(omega, dtype=float), profile.z.shape)
        active = dS_dt != 0
        if np.any(omega[active] <= 0):
            raise DegenerateControlError("Omega vanishes where sigma_ba must be reconstructed")
        Sa = np.zeros_like(profile.psi)
        Sa[active] = -1j * dS_dt[active] / omega[active]
    return FieldState(profile.t, profile.z, E, Sa, S)


def polariton_norm(profile: PolaritonProfile, grid=None) -> float:
    """Trapezoidal integral of |Psi|^2."""
    if grid is not None and grid.n_z != profile.z.size:
        raise GridMismatchError(f"grid has {grid.n_z} points, profile has {profile.z.size}")
    return float(np.trapezoid(np.abs(profile.psi) ** 2, profile.z))
