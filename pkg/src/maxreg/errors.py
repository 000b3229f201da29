"""Exception hierarchy.

Configuration-type errors derive from :class:`ModelError` or
:class:`DomainError`; numerical failures derive from :class:`NumericalError`.
The CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class MaxRegError(Exception):
    """Base class for all package errors."""


class DomainError(MaxRegError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class IncompatibleSignalsError(DomainError):
    """Signals do not share the same time grid and weight."""


class ShapeError(MaxRegError, ValueError):
    """Array or operator dimensions do not match."""


class BranchCutError(DomainError):
    """Fractional power requested on or across the negative real axis."""


class AnalyticityDomainError(DomainError):
    """Symbol evaluation requested outside its ball of analyticity."""


class DivergenceError(DomainError):
    """Laplace integral of a kernel requested left of its abscissa."""


class ModelError(MaxRegError, ValueError):
    """Coefficients violate the structural hypotheses of a model."""


class NeedsLargerNuError(ModelError):
    """The weight is below the threshold needed for a Neumann-series inverse."""

    def __init__(self, message: str, threshold: float):
        super().__init__(message)
        self.threshold = threshold


class UnsupportedLawError(ModelError):
    """The material law does not provide the data an operation needs."""


class PreconditionError(MaxRegError, ValueError):
    """A documented precondition of an operation is not met."""


class ParseError(MaxRegError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(MaxRegError, ArithmeticError):
    """A numerical procedure failed."""


class SolverError(NumericalError):
    """A per-frequency or time-step linear system could not be solved."""


class SingularBlockError(NumericalError):
    """N11(z) is numerically singular at a sample point."""


class InconsistencyError(NumericalError):
    """Two routes to the same quantity disagree beyond tolerance."""


class UsageError(MaxRegError, ValueError):
    """Invalid or conflicting command-line configuration."""
