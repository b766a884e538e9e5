"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class CopulaError(Exception):
    """Base class for all errors raised by phicopula."""


class InvalidArgumentError(CopulaError, ValueError):
    """An argument is outside the domain accepted by an operation."""


class ConstraintViolationError(CopulaError, ValueError):
    """A matrix breaks a linear constraint (e1 eigenvector, double stochasticity)."""


class InvalidFamilyError(CopulaError, ValueError):
    """A raw function family does not satisfy the normalisation it must have."""


class InvalidSourceError(CopulaError, ValueError):
    """A copula used as a discretization source is not 2-increasing."""


class NumericError(CopulaError, ArithmeticError):
    """A numerical procedure produced or met a non-finite / out-of-range value.

    ``location`` carries the offending point when one is known.
    """

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class SingularMatrixError(NumericError):
    """A matrix that must be inverted is numerically singular."""


class NotSquareIntegrableError(NumericError):
    """A density does not look square integrable on the unit square."""
