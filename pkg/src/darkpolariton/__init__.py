"""Dark-state polariton propagation in Lambda-type EIT media.

Adiabatic transport of the polariton, a linearised Maxwell-Bloch reference
integrator, validity diagnostics and an exact small-system quantum oracle.
"""

from .adiabatic import (
    displacement,
    extract_boundary,
    inject_boundary,
    transport,
    transport_many,
    transport_retarded,
)
from .bloch import Scenario, Trajectory, integrate, measure_peak_velocity, storage_retrieval_fidelity
from .errors import (
    ConfigError,
    DegenerateControlError,
    DomainOverflowError,
    NumericalError,
    PolaritonError,
)
from .medium import ControlSchedule, Grid, MediumParams, group_velocity, mixing_angle, omega_at, theta_at
from .polariton import FieldState, PolaritonProfile, from_polariton, polariton_norm, to_polariton

__version__ = "0.1.0"

__all__ = [
    "MediumParams",
    "ControlSchedule",
    "Grid",
    "omega_at",
    "theta_at",
    "mixing_angle",
    "group_velocity",
    "FieldState",
    "PolaritonProfile",
    "to_polariton",
    "from_polariton",
    "polariton_norm",
    "displacement",
    "transport",
    "transport_many",
    "transport_retarded",
    "inject_boundary",
    "extract_boundary",
    "Scenario",
    "Trajectory",
    "integrate",
    "measure_peak_velocity",
    "storage_retrieval_fidelity",
    "PolaritonError",
    "ConfigError",
    "DomainOverflowError",
    "DegenerateControlError",
    "NumericalError",
]
