"""Exception hierarchy for rotorhinf."""


class RotorHinfError(Exception):
    """Base class for all package errors."""


class NonFiniteError(RotorHinfError, ValueError):
    """An input contained NaN or Inf."""


class SingularityError(RotorHinfError):
    """Pitch angle reached the Euler-angle kinematic singularity guard."""


class DimensionError(RotorHinfError, ValueError):
    """Incompatible matrix or system dimensions."""


class AlgebraicLoopError(RotorHinfError):
    """A feedback interconnection has a singular ``I - D_loop`` matrix."""


class ImaginaryAxisEigError(RotorHinfError):
    """A Hamiltonian has eigenvalues on the imaginary axis."""


class NoStabilizingSolutionError(RotorHinfError):
    """A Riccati equation has no stabilizing solution."""


class RegularityError(RotorHinfError):
    """The generalized plant fails the rank conditions of H-infinity synthesis."""


class BisectionFailure(RotorHinfError):
    """No feasible gamma was found in the requested range."""


class ConfigError(RotorHinfError, ValueError):
    """A configuration document failed validation."""
