"""
Exception types raised by the modular package.

All of them derive from ValueError so callers that only know about
ValueError (the CLI boundary, older scripts) still catch them.
"""

from typing import Optional


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(ValueError):
    """Matrix, vector or subsystem dimensions do not fit together."""


class ValidationError(ValueError):
    """A density matrix or state violates one of its invariants."""


class EvaluationError(ValueError):
    """A spectral function is undefined on an eigenvalue."""


class ParameterError(ValueError):
    """A numeric parameter is outside its documented range."""


class ResourceError(ValueError):
    """Projected polynomial degree exceeds the configured cap."""

    def __init__(self, message: str, degree: Optional[int] = None, cap: Optional[int] = None):
        super().__init__(message)
        self.degree = degree
        self.cap = cap
