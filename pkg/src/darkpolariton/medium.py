"""Physical parameters, control-field schedules and space-time grids.

Units are dimensionless with ``c = 1`` unless stated otherwise; every rate is
expressed in inverse units of the same time scale. The collective coupling
``g_root_N`` (g times the square root of the atom number) is the only
combination of the microscopic constants that the solvers need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import expit

from .errors import ConfigError, OutOfDomainError

__all__ = [
    "MediumParams",
    "ControlSchedule",
    "Grid",
    "omega_at",
    "omega_rate",
    "mixing_angle",
    "mixing_angle_rate",
    "theta_at",
    "group_velocity",
    "omega_floor",
]

#: Relative floor (in units of g_root_N) below which E/Omega is never formed.
OMEGA_FLOOR = 1e-9


@dataclass(frozen=True)
class MediumParams:
    """Parameters of a homogeneous Lambda-type medium.

    ``g_root_N`` may be zero, which describes propagation without a medium.
    ``L`` is informational; solvers take their extent from :class:`Grid`.
    """

    g_root_N: float
    gamma_ab: float = 0.0
    gamma_bc: float = 0.0
    c: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        for name in ("g_root_N", "gamma_ab", "gamma_bc", "c", "L"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if self.g_root_N < 0:
            raise ConfigError(f"g_root_N must be >= 0, got {self.g_root_N}")
        if self.gamma_ab < 0 or self.gamma_bc < 0:
            raise ConfigError("decay rates must be non-negative")
        if self.c <= 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if self.L <= 0:
            raise ConfigError(f"L must be positive, got {self.L}")

    @property
    def coupling_sq(self) -> float:
        """g^2 N."""
        return self.g_root_N**2


def omega_floor(params: MediumParams) -> float:
    return OMEGA_FLOOR * params.g_root_N


_KINDS = ("constant", "tanh_pair", "sampled")


@dataclass(frozen=True)
class ControlSchedule:
    """Classical control Rabi frequency as a function of time.

    Use the constructors :meth:`constant`, :meth:`tanh_pair` and
    :meth:`sampled`. A ``tanh_pair`` schedule parameterises the mixing angle
    directly through

        cot(theta(t)) = A * (1 - tanh(s (t - t_off)) / 2 + tanh(s (t - t_on)) / 2)

    and Omega is recovered as ``g_root_N * cot(theta)``. Sampled schedules are
    interpolated with a monotone piecewise cubic and refuse to extrapolate.
    With ``retarded=True`` the schedule is evaluated at ``t - z/c``.
    """

    kind: str
    omega0: float = 0.0
    amplitude: float = 0.0
    rate: float = 0.0
    t_off: float = 0.0
    t_on: float = 0.0
    times: tuple = field(default=())
    values: tuple = field(default=())
    retarded: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "constant":
            if not (np.isfinite(self.omega0) and self.omega0 >= 0):
                raise ConfigError(f"constant Omega must be finite and >= 0, got {self.omega0}")
        elif self.kind == "tanh_pair":
            if not (self.amplitude >= 0 and np.isfinite(self.amplitude)):
                raise ConfigError("tanh_pair amplitude must be finite and >= 0")
            if not (self.rate > 0 and np.isfinite(self.rate)):
                raise ConfigError("tanh_pair rate must be finite and > 0")
        else:
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.size < 2 or t.shape != v.shape:
                raise ConfigError("sampled schedule needs matching 1-d times/values with >= 2 samples")
            if not np.all(np.diff(t) > 0):
                raise ConfigError("sampled schedule times must be strictly increasing")
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ConfigError("sampled schedule values must be finite and >= 0")

    @classmethod
    def constant(cls, omega0: float, retarded: bool = False) -> "ControlSchedule":
        return cls(kind="constant", omega0=float(omega0), retarded=retarded)

    @classmethod
    def tanh_pair(cls, amplitude: float, rate: float, t_off: float, t_on: float,
                  retarded: bool = False) -> "ControlSchedule":
        return cls(kind="tanh_pair", amplitude=float(amplitude), rate=float(rate),
                   t_off=float(t_off), t_on=float(t_on), retarded=retarded)

    @classmethod
    def sampled(cls, times, values, retarded: bool = False) -> "ControlSchedule":
        return cls(kind="sampled", times=tuple(float(x) for x in times),
                   values=tuple(float(x) for x in values), retarded=retarded)

    @cached_property
    def _pchip(self) -> PchipInterpolator:
        return PchipInterpolator(np.asarray(self.times), np.asarray(self.values), extrapolate=False)

    @cached_property
    def _pchip_rate(self):
        return self._pchip.derivative()

    @property
    def span(self) -> tuple[float, float]:
        """Time interval on which the schedule is defined."""
        if self.kind == "sampled":
            return self.times[0], self.times[-1]
        return -math.inf, math.inf

    def breakpoints(self) -> list[float]:
        """Times where the schedule changes character (useful for quadrature)."""
        if self.kind == "tanh_pair":
            return [self.t_off, self.t_on]
        if self.kind == "sampled":
            return list(self.times)
        return []

    def _cot_weights(self, tau):
        # 1 - tanh(a)/2 + tanh(b)/2 == expit(-2a) + expit(2b), free of cancellation
        a = self.rate * (tau - self.t_off)
        b = self.rate * (tau - self.t_on)
        return expit(-2.0 * a), expit(2.0 * b)

    def _check_domain(self, tau):
        if self.kind != "sampled":
            return
        lo, hi = self.span
        tau = np.asarray(tau)
        if np.any(tau < lo) or np.any(tau > hi) or np.any(np.isnan(tau)):
            raise OutOfDomainError(
                f"sampled schedule queried outside [{lo}, {hi}] "
                f"(requested range [{np.nanmin(tau)}, {np.nanmax(tau)}])")


def _local_time(schedule: ControlSchedule, params: MediumParams, t, z):
    t = np.asarray(t, dtype=float)
    if schedule.retarded:
        return t - np.asarray(z, dtype=float) / params.c
    return t


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def omega_at(schedule: ControlSchedule, params: MediumParams, t, z=0.0):
    """Control Rabi frequency Omega(t) (or Omega(t - z/c) when retarded).

    Broadcasts over array-valued ``t`` and ``z``.
    """
    tau = _local_time(schedule, params, t, z)
    if schedule.kind == "constant":
        out = np.full(np.shape(tau), schedule.omega0)
    elif schedule.kind == "tanh_pair":
        w_off, w_on = schedule._cot_weights(tau)
        out = params.g_root_N * schedule.amplitude * (w_off + w_on)
    else:
        schedule._check_domain(tau)
        out = schedule._pchip(tau)
    return _scalar_or_array(np.maximum(out, 0.0))


def omega_rate(schedule: ControlSchedule, params: MediumParams, t, z=0.0):
    """Time derivative dOmega/dt at fixed z."""
    tau = _local_time(schedule, params, t, z)
    if schedule.kind == "constant":
        out = np.zeros(np.shape(tau))
    elif schedule.kind == "tanh_pair":
        w_off, w_on = schedule._cot_weights(tau)
        s = schedule.rate
        d = -2.0 * s * w_off * (1.0 - w_off) + 2.0 * s * w_on * (1.0 - w_on)
        out = params.g_root_N * schedule.amplitude * d
    else:
        schedule._check_domain(tau)
        out = schedule._pchip_rate(tau)
    return _scalar_or_array(out)


def mixing_angle(omega, params: MediumParams):
    """Mixing angle theta = arctan(g_root_N / Omega) in [0, pi/2].

    Evaluated with ``arctan2`` so that Omega = 0 gives exactly pi/2 (and a
    vanishing coupling gives theta = 0).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ConfigError("Omega must be non-negative")
    return _scalar_or_array(np.arctan2(params.g_root_N, omega))


def mixing_angle_rate(omega, omega_dot, params: MediumParams):
    """d theta / dt = -g_root_N * dOmega/dt / (g^2 N + Omega^2)."""
    omega = np.asarray(omega, dtype=float)
    lam_sq = params.coupling_sq + omega**2
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(lam_sq > 0, -params.g_root_N * np.asarray(omega_dot) / lam_sq, 0.0)
    return _scalar_or_array(rate)


def theta_at(schedule: ControlSchedule, params: MediumParams, t, z=0.0):
    return mixing_angle(omega_at(schedule, params, t, z), params)


def group_velocity(theta, params: MediumParams):
    """Polariton velocity c cos^2(theta)."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > np.pi / 2 + 1e-15):
        raise ConfigError("theta must lie in [0, pi/2]")
    return _scalar_or_array(params.c * np.cos(theta) ** 2)


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid.

    ``dz = (z_max - z_min) / (n_z - 1)`` and ``dt = (t_max - t_min) / n_t``.
    """

    z_min: float
    z_max: float
    n_z: int
    t_min: float
    t_max: float
    n_t: int

    def __post_init__(self):
        if int(self.n_z) != self.n_z or self.n_z < 2:
            raise ConfigError(f"n_z must be an integer >= 2, got {self.n_z}")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ConfigError(f"n_t must be an integer >= 1, got {self.n_t}")
        if not self.z_max > self.z_min:
            raise ConfigError("z_max must exceed z_min")
        if not self.t_max > self.t_min:
            raise ConfigError("t_max must exceed t_min")

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.n_z - 1)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / self.n_t

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.n_z)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_t + 1)

    def check_alignment(self, c: float, rtol: float = 1e-9) -> None:
        """Raise unless dz == c*dt, the exact-shift advection contract."""
        if abs(self.dz - c * self.dt) > rtol * self.dz:
            raise ConfigError(
                f"grid not aligned for exact advection: dz={self.dz!r} but c*dt={c * self.dt!r}")
