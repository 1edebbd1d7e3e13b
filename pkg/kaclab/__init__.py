"""Kac's walk on SO(n): couplings, induced-map Jacobians and mixing diagnostics."""

from .config import DEFAULT_CONFIG, LabConfig
from .errors import (
    CouplingNumericsExhausted,
    DegenerateVolumeError,
    DomainError,
    InsufficientCoverageError,
    KacLabError,
    NumericError,
    SingularJacobianError,
)

__version__ = "0.1.0"

__all__ = [
    "CouplingNumericsExhausted",
    "DEFAULT_CONFIG",
    "DegenerateVolumeError",
    "DomainError",
    "InsufficientCoverageError",
    "KacLabError",
    "LabConfig",
    "NumericError",
    "SingularJacobianError",
    "__version__",
]
