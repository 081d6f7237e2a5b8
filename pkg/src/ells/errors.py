"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class EllsError(Exception):
    """Base class for library errors."""


class DomainError(EllsError, ValueError):
    """Argument outside the validated domain of an operation."""


class PoleError(EllsError, ZeroDivisionError):
    """Evaluation hit a pole. ``where`` carries the offending content/box/lattice point."""

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


class UnsupportedError(EllsError, NotImplementedError):
    """Requested order or option is outside the built-in tables."""


class SingularParameterError(EllsError, ZeroDivisionError):
    """Parameters make a weight denominator vanish."""


class BranchError(EllsError, ValueError):
    """A real root was requested of a nonpositive radicand."""


class DegenerateMeasureError(EllsError, ZeroDivisionError):
    """Normalization of a truncated measure vanished."""


class NoSolutionError(EllsError, ValueError):
    """A transcendental equation has no solution on the requested branch."""
