"""Exceptions raised by spin_motion."""


class SpinMotionError(Exception):
    """Base class of every error raised by the package."""


class DomainError(SpinMotionError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(SpinMotionError, ValueError):
    """A run configuration is invalid or incomplete."""


class TruncationError(SpinMotionError, RuntimeError):
    """
    Population leaks out of the retained Fock levels.

    Parameters
    ----------
    message: str
        Error message
    leakage: float | None
        Population found in the monitored top levels
    suggested_dim: int | None
        Truncation that would keep the leakage within budget
    """

    def __init__(self, message, leakage=None, suggested_dim=None):
        if suggested_dim is not None:
            message = f"{message} (suggested dim: {suggested_dim})"
        super().__init__(message)
        self.leakage = leakage
        self.suggested_dim = suggested_dim


class IntegrationError(SpinMotionError, RuntimeError):
    """The time integration did not converge or drifted in norm."""


class ParseError(SpinMotionError, ValueError):
    """
    An input file could not be parsed.

    Parameters
    ----------
    message: str
        Error message
    line: int | None
        1-based line number of the offending line
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
