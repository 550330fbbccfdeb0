"""Exception hierarchy shared by all solvers.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and grid overflow with 4.
"""


class PolaritonError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 3


class ConfigError(PolaritonError, ValueError):
    """Invalid parameters, schedules, grids or configuration files."""

    exit_code = 2


class GridMismatchError(ConfigError):
    """Arrays that must share one spatial grid do not."""


class DimensionError(ConfigError):
    """Requested Hilbert space is larger than the supported desk-scale bound."""


class TruncationError(ConfigError):
    """Excitation number exceeds the photon truncation or the atom count."""


class OutOfDomainError(PolaritonError, ValueError):
    """A sampled schedule was queried outside its sample range."""

    exit_code = 4


class DomainOverflowError(PolaritonError):
    """Pulse support reached the edge of the computational grid."""

    exit_code = 4


class DegenerateControlError(PolaritonError):
    """The control Rabi frequency fell below the floor where a ratio E/Omega is required."""


class UnsupportedRegimeError(PolaritonError):
    """The operation is not defined for the supplied schedule (e.g. time-varying entry)."""

    exit_code = 2


class NumericalError(PolaritonError):
    """Quadrature or ODE integration failed, or the integrator went unstable."""


class InsufficientDataError(PolaritonError):
    """Not enough snapshots for a finite-difference estimate."""


class UndefinedResidualError(PolaritonError):
    """A normalised residual has a vanishing normaliser."""


class ZeroNormError(PolaritonError, ValueError):
    """A profile with zero norm was passed where a normalisable one is required."""
