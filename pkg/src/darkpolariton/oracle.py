"""Exact pure-state verification on N three-level atoms and one photon mode.

The Hilbert space is the full product ``(C^3)^N (x) C^(n_max+1)`` with no
symmetry reduction, so collective behaviour emerges rather than being
assumed. Basis ordering is lexicographic and atoms-major: the flat index of
``|l_1 ... l_N>|n>`` is ``(sum_j l_j 3^(N-j)) * (n_max + 1) + n`` with levels
numbered ``a=0, b=1, c=2``. Operators are stored as scipy sparse matrices
(``hbar = 1``); call ``.toarray()`` for a dense copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import ConfigError, DimensionError, NumericalError, TruncationError
from .medium import ControlSchedule, MediumParams, mixing_angle, omega_at

__all__ = [
    "SystemSpec",
    "QuantumRegister",
    "TransferResult",
    "build_interaction",
    "excitation_operator",
    "dark_state",
    "dark_residual",
    "commutator_expectation",
    "basis_state",
    "collective_matter_state",
    "evolve_transfer",
    "ramp_schedule",
    "round_trip_schedule",
]

LEVELS = {"a": 0, "b": 1, "c": 2}
MAX_ATOMS = 8
MAX_PHOTONS = 4
NORM_TOL = 1e-8


@dataclass(frozen=True)
class SystemSpec:
    """N atoms sharing one resonant photon mode truncated at ``n_max`` photons."""

    N: int
    n_max: int
    g: float
    schedule: ControlSchedule | None = None

    def __post_init__(self):
        if int(self.N) != self.N or not 1 <= self.N <= MAX_ATOMS:
            raise DimensionError(f"N must be an integer in [1, {MAX_ATOMS}], got {self.N}")
        if int(self.n_max) != self.n_max or not 0 <= self.n_max <= MAX_PHOTONS:
            raise DimensionError(f"n_max must be an integer in [0, {MAX_PHOTONS}], got {self.n_max}")
        if not (np.isfinite(self.g) and self.g > 0):
            raise ConfigError(f"g must be positive, got {self.g}")
        if self.schedule is not None and self.schedule.retarded:
            raise ConfigError("the oracle has no spatial extent; retarded schedules are meaningless")

    @property
    def dim(self) -> int:
        return 3**self.N * (self.n_max + 1)

    @property
    def params(self) -> MediumParams:
        return MediumParams(g_root_N=self.g * math.sqrt(self.N))

    def omega(self, t):
        if self.schedule is None:
            raise ConfigError("SystemSpec has no control schedule")
        return omega_at(self.schedule, self.params, t)

    def theta(self, t):
        return mixing_angle(self.omega(t), self.params)


@dataclass(frozen=True, eq=False)
class QuantumRegister:
    """Pure state on the product basis described in the module docstring."""

    amplitudes: np.ndarray
    N: int
    n_max: int

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex, copy=True)
        if amps.shape != (3**self.N * (self.n_max + 1),):
            raise DimensionError(f"amplitude vector has shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "QuantumRegister") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QuantumRegister") -> float:
        return abs(self.overlap(other)) ** 2

    def excited_population(self) -> float:
        """Total probability of basis states with at least one atom in |a>."""
        mask = _excited_mask(self.N, self.n_max)
        return float(np.sum(np.abs(self.amplitudes[mask]) ** 2))


# -- operators -------------------------------------------------------------

def _single(i, j):
    m = sp.lil_matrix((3, 3))
    m[i, j] = 1.0
    return m.tocsr()


def _photon_annihilation(n_max):
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1,
                    shape=(n_max + 1, n_max + 1), format="csr")


def _embed_atom(N, j, op):
    left = sp.identity(3**j, format="csr")
    right = sp.identity(3 ** (N - j - 1), format="csr")
    return sp.kron(sp.kron(left, op), right, format="csr")


@lru_cache(maxsize=32)
def _operators(N: int, n_max: int) -> dict:
    a_ph = _photon_annihilation(n_max)
    eye_ph = sp.identity(n_max + 1, format="csr")
    eye_at = sp.identity(3**N, format="csr")
    collective = {}
    for name, (i, j) in {"ab": (0, 1), "ac": (0, 2), "bc": (1, 2), "aa": (0, 0), "cc": (2, 2),
                         "bb": (1, 1)}.items():
        collective[name] = sum(_embed_atom(N, k, _single(i, j)) for k in range(N))
    ops = {
        "a": sp.kron(eye_at, a_ph, format="csr"),
        "n_ph": sp.kron(eye_at, a_ph.T @ a_ph, format="csr"),
    }
    for name, op in collective.items():
        ops["sum_" + name] = sp.kron(op, eye_ph, format="csr")
    return ops


@lru_cache(maxsize=32)
def _excited_mask(N: int, n_max: int) -> np.ndarray:
    pop = _operators(N, n_max)["sum_aa"].diagonal()
    return pop > 0.5


def _interaction_parts(spec: SystemSpec):
    ops = _operators(spec.N, spec.n_max)
    coupling = spec.g * (ops["a"] @ ops["sum_ab"])
    V_g = -(coupling + coupling.getH())
    V_1 = -(ops["sum_ac"] + ops["sum_ac"].getH())
    return V_g.tocsr(), V_1.tocsr()


def build_interaction(spec: SystemSpec, omega: float) -> sp.csr_matrix:
    """``V = -sum_j (g a sigma_ab^j + Omega sigma_ac^j) + h.c.`` for one uniform mode."""
    if omega < 0:
        raise ConfigError("Omega must be non-negative")
    V_g, V_1 = _interaction_parts(spec)
    return (V_g + omega * V_1).tocsr()


def excitation_operator(spec: SystemSpec) -> sp.csr_matrix:
    """Photon number plus the number of atoms in |a> or |c>."""
    ops = _operators(spec.N, spec.n_max)
    return (ops["n_ph"] + ops["sum_aa"] + ops["sum_cc"]).tocsr()


# -- states ----------------------------------------------------------------

def _flat_index(spec: SystemSpec, levels, n_photons: int) -> int:
    idx = 0
    for level in levels:
        idx = 3 * idx + LEVELS[level]
    return idx * (spec.n_max + 1) + n_photons


def basis_state(spec: SystemSpec, levels, n_photons: int = 0) -> QuantumRegister:
    """Product state such as ``basis_state(spec, "bcb", 0)``."""
    levels = list(levels)
    if len(levels) != spec.N or any(l not in LEVELS for l in levels):
        raise ConfigError(f"levels must be {spec.N} characters from 'abc'")
    if not 0 <= n_photons <= spec.n_max:
        raise TruncationError(f"{n_photons} photons exceed truncation n_max={spec.n_max}")
    amps = np.zeros(spec.dim, dtype=complex)
    amps[_flat_index(spec, levels, n_photons)] = 1.0
    return QuantumRegister(amps, spec.N, spec.n_max)


def _ground(spec):
    return basis_state(spec, "b" * spec.N, 0)


def _polariton_annihilator(spec: SystemSpec, theta: float):
    ops = _operators(spec.N, spec.n_max)
    return (math.cos(theta) * ops["a"] - math.sin(theta) / math.sqrt(spec.N) * ops["sum_bc"]).tocsr()


def dark_state(spec: SystemSpec, theta: float, n: int) -> QuantumRegister:
    """Normalised ``(Psi^dagger)^n |0>|b...b>`` for the k = 0 polariton.

    The textbook prefactor ``1/sqrt(n!)`` normalises the state only for
    N >> n; the state is renormalised explicitly so finite N is exact.
    """
    if n < 0 or n > spec.n_max or n > spec.N:
        raise TruncationError(f"n={n} exceeds n_max={spec.n_max} or N={spec.N}")
    creator = _polariton_annihilator(spec, theta).getH().tocsr()
    vec = _ground(spec).amplitudes.copy()
    for _ in range(n):
        vec = creator @ vec
    vec /= math.sqrt(math.factorial(n))
    vec /= np.linalg.norm(vec)
    return QuantumRegister(vec, spec.N, spec.n_max)


def collective_matter_state(spec: SystemSpec, n: int = 1) -> QuantumRegister:
    """Symmetric state with n Raman excitations and no photons (sign as in dark_state at pi/2)."""
    return dark_state(spec, math.pi / 2, n)


def dark_residual(spec: SystemSpec, theta: float, n: int, omega: float) -> float:
    """``|| V(omega) |D_n(theta)> ||``; zero when theta matches omega.

    ``omega = inf`` (the partner of ``theta = 0``) returns the residual per
    unit Omega, ``|| lim V/Omega |D_n> ||``, which is the control term alone.
    """
    state = dark_state(spec, theta, n)
    if math.isinf(omega) and omega > 0:
        op = _interaction_parts(spec)[1]
    else:
        op = build_interaction(spec, omega)
    return float(np.linalg.norm(op @ state.amplitudes))


def commutator_expectation(spec: SystemSpec, theta: float, state: QuantumRegister | None = None) -> float:
    """Expectation of ``[Psi, Psi^dagger]`` (default: vacuum with all atoms in |b>).

    The photon part is evaluated in the truncated Fock space, where
    ``[a, a^dagger]`` equals ``-n_max`` on the top level; keep states below
    the truncation for physically meaningful values.
    """
    if state is None:
        state = _ground(spec)
    psi = _polariton_annihilator(spec, theta)
    psi_dag = psi.getH()
    comm = psi @ psi_dag - psi_dag @ psi
    v = state.amplitudes
    return float(np.vdot(v, comm @ v).real)


# -- dynamics --------------------------------------------------------------

def ramp_schedule(omega_start: float, omega_end: float, duration: float, t0: float = 0.0,
                  samples: int = 2001) -> ControlSchedule:
    """Smooth cos^2 ramp from ``omega_start`` to ``omega_end`` with zero slope at both ends."""
    t = np.linspace(t0, t0 + duration, samples)
    shape = np.cos(0.5 * np.pi * (t - t0) / duration) ** 2
    return ControlSchedule.sampled(t, omega_end + (omega_start - omega_end) * shape)


def round_trip_schedule(omega_max: float, duration: float, t0: float = 0.0,
                        samples: int = 4001) -> ControlSchedule:
    """Ramp down to zero over ``duration`` and back up over another ``duration``."""
    t = np.linspace(t0, t0 + 2.0 * duration, samples)
    return ControlSchedule.sampled(t, omega_max * np.cos(0.5 * np.pi * (t - t0) / duration) ** 2)


@dataclass(frozen=True, eq=False)
class TransferResult:
    final: QuantumRegister
    times: np.ndarray
    fidelity: np.ndarray
    norm: np.ndarray
    excitation: np.ndarray

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))

    @property
    def excitation_drift(self) -> float:
        return float(np.max(np.abs(self.excitation - self.excitation[0])))


def evolve_transfer(spec: SystemSpec, psi0: QuantumRegister, t_final: float, steps: int,
                    t0: float = 0.0, rtol: float = 1e-11, atol: float = 1e-13) -> TransferResult:
    """Integrate ``i d psi/dt = V(t) psi`` under ``spec.schedule``.

    Uses an adaptive eighth-order Runge-Kutta method and samples ``steps + 1``
    equally spaced times. ``fidelity`` is the overlap with the instantaneous
    dark state carrying the same number of excitations as ``psi0``.
    """
    if (psi0.N, psi0.n_max) != (spec.N, spec.n_max):
        raise DimensionError("initial state does not match the system spec")
    if steps < 1 or t_final <= t0:
        raise ValueError("need steps >= 1 and t_final > t0")
    V_g, V_1 = _interaction_parts(spec)
    n_op = excitation_operator(spec)
    n_exc = float(np.vdot(psi0.amplitudes, n_op @ psi0.amplitudes).real)
    n = int(round(n_exc))
    if abs(n_exc - n) > 1e-9:
        raise ValueError("initial state must have a definite excitation number")

    def rhs(t, y):
        return -1j * (V_g @ y + spec.omega(t) * (V_1 @ y))

    times = np.linspace(t0, t_final, steps + 1)
    sol = solve_ivp(rhs, (t0, t_final), psi0.amplitudes.copy(), method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalError(f"Schrodinger integration failed: {sol.message}")
    states = sol.y.T
    norms = np.linalg.norm(states, axis=1)
    if np.max(np.abs(norms - 1.0)) > NORM_TOL:
        raise NumericalError(f"norm drift {np.max(np.abs(norms - 1.0)):.3g} exceeds {NORM_TOL}")
    excitation = np.array([np.vdot(v, n_op @ v).real for v in states])
    fidelity = np.empty(times.size)
    for i, (t, v) in enumerate(zip(times, states)):
        target = dark_state(spec, float(spec.theta(t)), n)
        fidelity[i] = abs(np.vdot(target.amplitudes, v)) ** 2
    final = QuantumRegister(states[-1], spec.N, spec.n_max)
    return TransferResult(final, times, fidelity, norms, excitation)
