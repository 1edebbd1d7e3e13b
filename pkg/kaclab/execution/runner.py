"""Ordered replicate execution, serial or through a joblib pool."""

from __future__ import annotations

import logging
from typing import Any, Callable, TypeVar

import numpy as np
from joblib import Parallel, delayed

from ..errors import DomainError
from .streams import replicate_stream

logger = logging.getLogger(__name__)

Result = TypeVar("Result")


def run_replicates(
    task: Callable[..., Result],
    count: int,
    seed: int,
    tag: str,
    threads: int = 1,
    **kwargs: Any,
) -> list[Result]:
    """Call ``task(index, rng, **kwargs)`` for every replicate; results come back in index order."""

    if count < 0:
        raise DomainError(f"Replicate count must be non-negative, got {count}")
    if threads < 1:
        raise DomainError(f"Thread count must be positive, got {threads}")
    logger.info("Running %d replicates of '%s' on %d worker(s)", count, tag, threads)
    if threads == 1 or count <= 1:
        return [_invoke(task, seed, tag, index, kwargs) for index in range(count)]
    return Parallel(n_jobs=threads)(delayed(_invoke)(task, seed, tag, index, kwargs) for index in range(count))


def _invoke(task: Callable[..., Result], seed: int, tag: str, index: int, kwargs: dict[str, Any]) -> Result:
    rng: np.random.Generator = replicate_stream(seed, tag, index)
    return task(index, rng, **kwargs)
