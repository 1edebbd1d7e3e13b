"""Exception hierarchy shared by every kaclab package."""

from __future__ import annotations

from typing import Any, Mapping


class KacLabError(Exception):
    """Base class for all kaclab failures."""


class DomainError(KacLabError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class InsufficientCoverageError(DomainError):
    """A plane sequence ended before the requested schedule was realised."""


class NumericError(KacLabError, ArithmeticError):
    """A floating-point computation produced an unusable result."""


class SingularJacobianError(NumericError):
    """The induced-map derivative is numerically singular at the current iterate."""

    def __init__(self, message: str, smallest_singular_value: float) -> None:
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class DegenerateVolumeError(NumericError):
    """The Gram matrix of the derivative has non-positive determinant."""


class CouplingNumericsExhausted(NumericError):
    """The coalescence engine hit its solver-failure or proposal budget."""

    def __init__(self, message: str, diagnostics: Mapping[str, Any]) -> None:
        super().__init__(message)
        self.diagnostics = dict(diagnostics)
