"""
Krein String Toolkit - Errors
Exception hierarchy shared by the library, the CLI and the dashboard.
"""

from typing import Optional


class KreinError(Exception):
    """Root of every error raised by the toolkit."""


class DomainError(KreinError, ValueError):
    """An argument lies outside the domain of an operation."""


class InvalidCoefficientError(DomainError):
    """A coefficient a(t) is negative or 1/a is not locally integrable."""


class NotRepresentableError(KreinError):
    """The requested object cannot be represented in the density-plus-atoms model."""


class AccuracyError(KreinError):
    """An adaptive computation did not reach its tolerance.

    The best estimate reached before giving up is kept on the exception.
    """

    def __init__(self, message: str, best_estimate: Optional[float] = None):
        super().__init__(message)
        self.best_estimate = best_estimate


class NumericalError(KreinError):
    """A dense linear-algebra routine failed to converge."""


class InputError(KreinError):
    """Malformed input file, unknown key or out-of-range override."""
