"""Exception types shared across the package."""

from __future__ import annotations


class InvalidArgument(ValueError):
    """A precondition on an input was violated."""


class NumericalFailure(ArithmeticError):
    """A numerical routine could not produce a usable result.

    ``diagnostics`` carries whatever the failing routine knows about the
    offending object (matrix size, smallest eigenvalue, jitter tried, ...).
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InsufficientData(ValueError):
    """Too few usable observations for a fit."""
