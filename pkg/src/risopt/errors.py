"""Exception hierarchy shared across the package."""


class RisoptError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(RisoptError):
    """Electromagnetic model cannot produce a valid impedance matrix."""


class NetworkError(RisoptError):
    """Invalid multiport network operation (roles, singular blocks, ...)."""


class TouchstoneError(RisoptError):
    """Malformed Touchstone file.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class QcqpError(RisoptError):
    """Inconsistent quadratic-program construction."""


class SolverError(RisoptError):
    """Interior-point solver failed to produce a usable iterate."""
