"""Exception types raised across the package."""


class UAVPayloadError(Exception):
    """Base class for all package errors."""


class SingularAttitudeError(UAVPayloadError, ValueError):
    """Pitch angle too close to +-pi/2 for the Euler-rate map to be inverted."""


class NonFiniteStateError(UAVPayloadError, ValueError):
    pass


class AssumptionViolation(UAVPayloadError, ValueError):
    """A closed-form result was requested for a vehicle that breaks its assumptions."""


class DegenerateAlphaError(UAVPayloadError, ValueError):
    """alpha == 0: the zero-dynamics Jacobian and the transfer zeros are undefined."""


class SingularDecouplingError(UAVPayloadError, ValueError):
    """The input-output decoupling matrix cannot be inverted at this state."""


class SimulationAborted(UAVPayloadError, RuntimeError):
    """Integration stopped early (attitude singularity or divergence guard)."""


class ConfigError(UAVPayloadError, ValueError):
    pass
