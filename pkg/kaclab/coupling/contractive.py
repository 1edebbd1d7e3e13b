"""Locally contractive coupling of two Kac walks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import DEFAULT_CONFIG, LabConfig
from ..errors import DomainError
from ..group.so_n import Matrix, plane_axes_table, plane_count, reorthonormalize, rotate_rows, wrap_angle

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class CouplingTrace:
    """Per-step Hilbert-Schmidt distances of a coupled pair, t = 0..T.

    ``dist_main`` holds NaN until the main chains are known.
    """

    dist_main: NDArray[np.float64]
    dist_scaffold: NDArray[np.float64]
    coalesced: bool = False
    coalescence_step: int | None = None
    extras: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.dist_main = np.asarray(self.dist_main, dtype=float).reshape(-1)
        self.dist_scaffold = np.asarray(self.dist_scaffold, dtype=float).reshape(-1)
        if self.dist_main.shape != self.dist_scaffold.shape:
            raise DomainError("Main and scaffold distance traces must have equal length")
        known = self.dist_main[~np.isnan(self.dist_main)]
        if np.any(known < 0) or np.any(self.dist_scaffold < 0):
            raise DomainError("Distances must be non-negative")
        if self.coalesced and self.coalescence_step is None:
            raise DomainError("A coalesced trace needs its coalescence step")

    @property
    def horizon(self) -> int:
        return self.dist_scaffold.size - 1


def contractive_shift(X: Matrix, Y: Matrix, i: int) -> float:
    """(1/sqrt 2) <P(Y X^T - I), a_i>, computed from rows k and l only."""

    n = X.shape[0]
    rows, cols = plane_axes_table(n)
    k, l = rows[i - 1], cols[i - 1]
    return 0.5 * (float(Y[k] @ X[l]) - float(Y[l] @ X[k]))


def contractive_step(X: ArrayLike, Y: ArrayLike, i: int, eta_x: float) -> float:
    """Angle for the Y chain that cancels the plane-i component of the discrepancy."""

    left = np.asarray(X, dtype=float)
    right = np.asarray(Y, dtype=float)
    if left.shape != right.shape or left.ndim != 2:
        raise DomainError(f"States must share a square shape, got {left.shape} and {right.shape}")
    N = plane_count(left.shape[0])
    if not 1 <= i <= N:
        raise DomainError(f"Plane index {i} outside 1..{N}")
    return float(wrap_angle(eta_x - contractive_shift(left, right, i)))


def couple_along(
    X0: ArrayLike,
    Y0: ArrayLike,
    planes: NDArray[np.int64],
    eta_x: NDArray[np.float64],
    config: LabConfig = DEFAULT_CONFIG,
) -> tuple[NDArray[np.float64], NDArray[np.float64], Matrix, Matrix]:
    """Drive both chains through *planes*; return (eta_y, distances, X_T, Y_T)."""

    X = np.array(X0, dtype=float, copy=True)
    Y = np.array(Y0, dtype=float, copy=True)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DomainError(f"Chains must share a square shape, got {X.shape} and {Y.shape}")
    rows, cols = plane_axes_table(X.shape[0])
    steps = len(planes)
    eta_y = np.empty(steps)
    distances = np.empty(steps + 1)
    distances[0] = np.linalg.norm(X - Y)
    for t, plane in enumerate(np.asarray(planes).tolist()):
        k, l = rows[plane - 1], cols[plane - 1]
        eta_y[t] = wrap_angle(eta_x[t] - 0.5 * (float(Y[k] @ X[l]) - float(Y[l] @ X[k])))
        rotate_rows(X, k, l, math.cos(eta_x[t]), math.sin(eta_x[t]))
        rotate_rows(Y, k, l, math.cos(eta_y[t]), math.sin(eta_y[t]))
        if (t + 1) % config.reorthonormalize_every == 0:
            X = reorthonormalize(X, config)
            Y = reorthonormalize(Y, config)
        distances[t + 1] = np.linalg.norm(X - Y)
    return eta_y, distances, X, Y


def run_contractive_coupling(
    X0: ArrayLike,
    Y0: ArrayLike,
    T: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> tuple[CouplingTrace, NDArray[np.int64], NDArray[np.float64], NDArray[np.float64]]:
    if T < 0:
        raise DomainError(f"Horizon must be non-negative, got {T}")
    n = np.asarray(X0).shape[0]
    planes = rng.integers(1, plane_count(n) + 1, size=T)
    eta_x = rng.uniform(0.0, 2 * math.pi, size=T)
    eta_y, distances, _, _ = couple_along(X0, Y0, planes, eta_x, config)
    zero = np.flatnonzero(distances == 0.0)
    coalesced = bool(zero.size) and bool(np.all(distances[zero[0]:] == 0.0))
    trace = CouplingTrace(
        dist_main=distances,
        dist_scaffold=distances.copy(),
        coalesced=coalesced,
        coalescence_step=int(zero[0]) if coalesced else None,
    )
    logger.debug("Contractive coupling over %d steps: %.3e -> %.3e", T, distances[0], distances[-1])
    return trace, planes, eta_x, eta_y
