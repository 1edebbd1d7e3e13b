"""Kac's walk: update sequences, chain evolution and the sphere projection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import DEFAULT_CONFIG, LabConfig
from ..errors import DomainError
from ..group.so_n import (
    Matrix,
    plane_axes_table,
    plane_count,
    reorthonormalize,
    rotate_rows,
    wrap_angle,
)

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


@dataclass(slots=True)
class WalkState:
    X: Matrix
    t: int = 0
    since_reorthonormalized: int = 0

    def __post_init__(self) -> None:
        self.X = np.array(self.X, dtype=float, copy=True)
        if self.X.ndim != 2 or self.X.shape[0] != self.X.shape[1]:
            raise DomainError(f"Walk state must be a square matrix, got shape {self.X.shape}")
        if self.t < 0:
            raise DomainError(f"Step counter must be non-negative, got {self.t}")

    @classmethod
    def identity(cls, n: int) -> "WalkState":
        plane_count(n)
        return cls(X=np.eye(n))

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(slots=True)
class UpdateSequence:
    """Ordered (plane, angle) pairs driving a walk; planes are 1-based."""

    n: int
    planes: NDArray[np.int64] = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    angles: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        N = plane_count(self.n)
        self.planes = np.asarray(self.planes, dtype=np.int64).reshape(-1)
        self.angles = np.asarray(self.angles, dtype=float).reshape(-1)
        if self.planes.shape != self.angles.shape:
            raise DomainError(
                f"Plane and angle sequences differ in length: {self.planes.size} vs {self.angles.size}"
            )
        if self.planes.size and (self.planes.min() < 1 or self.planes.max() > N):
            raise DomainError(f"Plane indices must lie in 1..{N} for n={self.n}")
        if self.angles.size and (
            not np.all(np.isfinite(self.angles)) or self.angles.min() < 0.0 or self.angles.max() >= TWO_PI
        ):
            raise DomainError("Angles must lie in [0, 2*pi)")

    def __len__(self) -> int:
        return int(self.planes.size)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        for plane, angle in zip(self.planes.tolist(), self.angles.tolist()):
            yield plane, angle

    def __getitem__(self, index: slice) -> "UpdateSequence":
        if not isinstance(index, slice):
            raise TypeError("UpdateSequence supports slicing only")
        return UpdateSequence(self.n, self.planes[index], self.angles[index])

    @classmethod
    def from_pairs(cls, n: int, pairs: ArrayLike) -> "UpdateSequence":
        """Build a sequence from (plane, angle) pairs, reducing angles mod 2*pi."""

        rows = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(n, rows[:, 0].astype(np.int64), np.asarray(wrap_angle(rows[:, 1])).reshape(-1))

    def concat(self, other: "UpdateSequence") -> "UpdateSequence":
        if other.n != self.n:
            raise DomainError(f"Cannot join sequences for n={self.n} and n={other.n}")
        return UpdateSequence(
            self.n,
            np.concatenate([self.planes, other.planes]),
            np.concatenate([self.angles, other.angles]),
        )


def random_update_sequence(n: int, T: int, rng: np.random.Generator) -> UpdateSequence:
    if T < 0:
        raise DomainError(f"Horizon must be non-negative, got {T}")
    planes = rng.integers(1, plane_count(n) + 1, size=T)
    angles = rng.uniform(0.0, TWO_PI, size=T)
    return UpdateSequence(n, planes, angles)


def run_walk(state: WalkState, seq: UpdateSequence, config: LabConfig = DEFAULT_CONFIG) -> WalkState:
    if seq.n != state.n:
        raise DomainError(f"Sequence dimension {seq.n} does not match state dimension {state.n}")
    rows, cols = plane_axes_table(state.n)
    X = state.X.copy()
    since = state.since_reorthonormalized
    cosines = np.cos(seq.angles)
    sines = np.sin(seq.angles)
    for step, plane in enumerate(seq.planes.tolist()):
        rotate_rows(X, rows[plane - 1], cols[plane - 1], cosines[step], sines[step])
        since += 1
        if since >= config.reorthonormalize_every:
            X = reorthonormalize(X, config)
            logger.debug("Re-orthonormalized walk state at t=%d", state.t + step + 1)
            since = 0
    return WalkState(X=X, t=state.t + len(seq), since_reorthonormalized=since)


def walk_states(
    n: int,
    T: int,
    replicates: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> NDArray[np.float64]:
    """Evolve *replicates* independent walks from the identity for T steps.

    Returns an array of shape (replicates, n, n).
    """

    if T < 0 or replicates < 1:
        raise DomainError(f"Need T >= 0 and at least one replicate, got T={T}, replicates={replicates}")
    N = plane_count(n)
    rows, cols = plane_axes_table(n)
    states = np.broadcast_to(np.eye(n), (replicates, n, n)).copy()
    index = np.arange(replicates)
    for step in range(T):
        planes = rng.integers(0, N, size=replicates)
        angles = rng.uniform(0.0, TWO_PI, size=replicates)
        k, l = rows[planes], cols[planes]
        c = np.cos(angles)[:, None]
        s = np.sin(angles)[:, None]
        row_k = states[index, k]
        row_l = states[index, l]
        states[index, k] = c * row_k + s * row_l
        states[index, l] = c * row_l - s * row_k
        if (step + 1) % config.reorthonormalize_every == 0:
            for replicate in range(replicates):
                states[replicate] = reorthonormalize(states[replicate], config)
    return states


def sphere_projection(state: WalkState) -> NDArray[np.float64]:
    """First column of X, which performs Kac's walk on the unit sphere."""

    return state.X[:, 0].copy()
