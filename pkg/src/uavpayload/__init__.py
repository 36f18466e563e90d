"""Payload and point-of-interest placement analysis for multirotor UAVs.

Euler-Lagrange model of a multirotor with a rigidly attached payload,
zero-dynamics stability of the point-of-interest output, closed-form LQR and
H2 analysis of the hover linearization, and closed-loop simulation.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AssumptionViolation,
    ConfigError,
    DegenerateAlphaError,
    NonFiniteStateError,
    SimulationAborted,
    SingularAttitudeError,
    SingularDecouplingError,
    UAVPayloadError,
)
from .vehicle_model import ControlInput, Plant, RigidState, VehicleParams  # noqa: E402
from .riccati_h2 import CostWeights  # noqa: E402
from .sim_engine import SimConfig  # noqa: E402

__all__ = [
    "AssumptionViolation",
    "ConfigError",
    "ControlInput",
    "CostWeights",
    "DegenerateAlphaError",
    "NonFiniteStateError",
    "Plant",
    "RigidState",
    "SimConfig",
    "SimulationAborted",
    "SingularAttitudeError",
    "SingularDecouplingError",
    "UAVPayloadError",
    "VehicleParams",
]
