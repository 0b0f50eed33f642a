"""Exception types shared across the package."""


class AcmptcError(Exception):
    """Base class for package errors."""


class ConfigError(AcmptcError, ValueError):
    """Invalid configuration value or document."""


class InputError(AcmptcError, ValueError):
    """Invalid argument to a simulation operation."""


class TraceParseError(AcmptcError, ValueError):
    """Malformed trace file; the message names the offending line."""


class DomainError(AcmptcError, ValueError):
    """Argument outside the domain of a formula (zero RTT, p outside (0, 1), ...)."""


class AllocationError(AcmptcError, ValueError):
    """No subflow can carry load."""


class DivergenceError(AcmptcError, RuntimeError):
    """Training produced non-finite parameters."""


class ShapeError(AcmptcError, ValueError):
    """Network parameters or inputs have inconsistent shapes."""
