"""Exception types shared across the package."""


class TwinBeamError(Exception):
    """Base class for all package-specific errors."""


class InvalidGainError(TwinBeamError, ValueError):
    """Intensity gain below 1; a phase-insensitive amplifier cannot deamplify."""


class InvalidTransmissionError(TwinBeamError, ValueError):
    """Transmission outside the physical range [0, 1]."""


class ModeCollisionError(TwinBeamError, ValueError):
    """A mode label was reused where a fresh label is required."""


class ModeMismatchError(TwinBeamError, ValueError):
    """Operands are defined on incompatible mode sets."""


class TruncationError(TwinBeamError, RuntimeError):
    """Fock-space truncation leakage exceeded the certified bound."""


class InfeasibleObservablesError(TwinBeamError, ValueError):
    """Observable pair lies outside the reachable set of the medium model."""


class ConvergenceError(TwinBeamError, RuntimeError):
    """Iterative solver failed to reach the requested residual."""


class UnphysicalMeasurementError(TwinBeamError, ValueError):
    """Measured value below the floor any physical source could produce."""


class NoInteriorOptimumError(TwinBeamError, ValueError):
    """The requested one-dimensional optimum does not exist (monotone or degenerate regime)."""


class NegativePowerError(TwinBeamError, ValueError):
    """Background subtraction left no positive signal power."""


class DataFormatError(TwinBeamError, ValueError):
    """Malformed, inconsistent, or insufficient measurement records."""
