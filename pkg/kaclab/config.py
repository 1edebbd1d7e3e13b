"""Run-time configuration for kaclab experiments."""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import product
from typing import Iterator


@dataclass(frozen=True)
class LabConfig:
    reorthonormalize_every: int
    orthogonality_tolerance: float
    reorthonormalize_limit: float
    newton_tolerance: float
    newton_max_iterations: int
    newton_box_inflation: float
    singular_threshold: float
    rank_tolerance: float
    default_epsilon: float
    solver_retry_budget: int
    max_proposals: int
    inequality_tolerance: float
    fit_floor: float
    min_fit_points: int
    bound_constant: float
    intermediate_q: float
    confidence: float
    min_samples: int
    threads_env_var: str
    schema_version: int


DEFAULT_CONFIG = LabConfig(
    reorthonormalize_every=10_000,
    orthogonality_tolerance=1e-8,
    reorthonormalize_limit=0.1,
    newton_tolerance=1e-10,
    newton_max_iterations=50,
    newton_box_inflation=1.1,
    singular_threshold=1e-12,
    rank_tolerance=1e-8,
    default_epsilon=0.05,
    solver_retry_budget=100,
    max_proposals=10_000,
    inequality_tolerance=1e-10,
    fit_floor=1e-12,
    min_fit_points=10,
    bound_constant=1000.0,
    intermediate_q=100.0,
    confidence=0.95,
    min_samples=100,
    threads_env_var="KACLAB_THREADS",
    schema_version=1,
)


def default_threads(config: LabConfig = DEFAULT_CONFIG) -> int:
    """Thread count from the environment, falling back to a single worker."""

    raw = os.environ.get(config.threads_env_var, "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return value if value > 0 else 1


def oracle_sweep(name: str) -> Iterator[tuple[float, ...]]:
    """Yield the parameter tuples a verification oracle is swept over."""

    if name == "small-ball":
        # (alpha, beta, epsilon)
        yield from product((0.5, 1.0, 2.0), (-1.0, 0.0, 1.0), (1e-4, 1e-2))
    elif name == "determinant":
        # (N, delta)
        yield from ((2, 0.5), (3, 0.1), (4, 0.05), (6, 0.2))
    elif name in {"exponential", "tangent"}:
        # (n, c)
        c = 1e-3 if name == "exponential" else 1e-4
        yield from ((3, c), (4, c))
    else:
        raise KeyError(f"No sweep registered for oracle '{name}'")
