"""Marked-time schedules for the non-Markovian coupling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import DomainError, InsufficientCoverageError
from ..group.so_n import plane_count

logger = logging.getLogger(__name__)

Flavor = Literal["greedy", "lazy"]
FLAVORS: tuple[str, ...] = ("greedy", "lazy")


@dataclass(slots=True, frozen=True)
class Schedule:
    n: int
    marked_times: NDArray[np.int64]
    flavor: Flavor
    Q: float | None = None

    def __post_init__(self) -> None:
        if self.flavor not in FLAVORS:
            raise DomainError(f"Unknown schedule flavor '{self.flavor}'")
        times = np.asarray(self.marked_times, dtype=np.int64)
        if times.size != plane_count(self.n):
            raise DomainError(f"A schedule needs {plane_count(self.n)} marked times, got {times.size}")
        if times[0] < 0 or np.any(np.diff(times) <= 0):
            raise DomainError("Marked times must be non-negative and strictly increasing")
        if self.flavor == "lazy" and (self.Q is None or self.Q <= 0):
            raise DomainError(f"Lazy schedules need Q > 0, got {self.Q}")
        times.setflags(write=False)
        object.__setattr__(self, "marked_times", times)

    @property
    def horizon(self) -> int:
        return int(self.marked_times[-1]) + 1


def lazy_gap(n: int, Q: float) -> int:
    """Forced spacing ceil(Q n^2 log n) between consecutive lazy marked times."""

    if Q <= 0:
        raise DomainError(f"Q must be positive, got {Q}")
    return math.ceil(Q * n * n * math.log(n))


def greedy_schedule(planes: ArrayLike, n: int) -> Schedule:
    """Mark the first occurrence of every plane index, in order of appearance."""

    sequence = _plane_sequence(planes, n)
    distinct, first = np.unique(sequence, return_index=True)
    if distinct.size < plane_count(n):
        raise InsufficientCoverageError(
            f"Plane sequence of length {sequence.size} covers {distinct.size} of {plane_count(n)} planes"
        )
    return Schedule(n=n, marked_times=np.sort(first), flavor="greedy")


def lazy_schedule(planes: ArrayLike, n: int, Q: float) -> Schedule:
    """s_1 = first t with plane 1; s_{l+1} = first t >= s_l + gap with plane l+1."""

    sequence = _plane_sequence(planes, n)
    gap = lazy_gap(n, Q)
    marked = np.empty(plane_count(n), dtype=np.int64)
    earliest = 0
    for index in range(marked.size):
        positions = np.flatnonzero(sequence == index + 1)
        slot = np.searchsorted(positions, earliest)
        if slot == positions.size:
            raise InsufficientCoverageError(
                f"Plane {index + 1} does not occur at or after t={earliest} in a sequence of length {sequence.size}"
            )
        marked[index] = positions[slot]
        earliest = int(marked[index]) + gap
    return Schedule(n=n, marked_times=marked, flavor="lazy", Q=Q)


def make_schedule(planes: ArrayLike, n: int, flavor: str, Q: float | None = None) -> Schedule:
    if flavor == "greedy":
        return greedy_schedule(planes, n)
    if flavor == "lazy":
        if Q is None:
            raise DomainError("Lazy schedules need Q")
        return lazy_schedule(planes, n, Q)
    raise DomainError(f"Unknown schedule flavor '{flavor}'")


def draw_scheduled_planes(
    n: int,
    flavor: str,
    Q: float | None,
    rng: np.random.Generator,
) -> tuple[NDArray[np.int64], Schedule]:
    """Draw uniform planes in chunks until the schedule is realised.

    Returns the plane sequence truncated to the schedule horizon.
    """

    N = plane_count(n)
    chunk = _chunk_length(n, flavor, Q)
    planes = rng.integers(1, N + 1, size=chunk)
    while True:
        try:
            schedule = make_schedule(planes, n, flavor, Q)
        except InsufficientCoverageError:
            planes = np.concatenate([planes, rng.integers(1, N + 1, size=chunk)])
            logger.debug("Extended plane sequence to %d steps for %s schedule", planes.size, flavor)
            continue
        return planes[: schedule.horizon].copy(), schedule


def _chunk_length(n: int, flavor: str, Q: float | None) -> int:
    N = plane_count(n)
    if flavor == "greedy":
        expected = N * sum(1.0 / k for k in range(1, N + 1))
    elif flavor == "lazy":
        if Q is None:
            raise DomainError("Lazy schedules need Q")
        expected = (N - 1) * lazy_gap(n, Q) + N * N
    else:
        raise DomainError(f"Unknown schedule flavor '{flavor}'")
    return int(math.ceil(1.5 * expected)) + 16


def _plane_sequence(planes: ArrayLike, n: int) -> NDArray[np.int64]:
    sequence = np.asarray(planes, dtype=np.int64).reshape(-1)
    N = plane_count(n)
    if sequence.size and (sequence.min() < 1 or sequence.max() > N):
        raise DomainError(f"Plane indices must lie in 1..{N}")
    return sequence
