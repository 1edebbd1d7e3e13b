"""Smallest-singular-value experiments and the phi_n quantile."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import DEFAULT_CONFIG, LabConfig
from ..coupling.nonmarkov import sample_induced_spec
from ..errors import DomainError
from ..group.so_n import plane_count
from ..jacobian.matrices import d_infinity, d_matrix
from ..utils.bounds import dinf_floor_log10
from ..utils.diagnostics import quantile_interval

logger = logging.getLogger(__name__)

PHI_FLAVORS = {"d": "D", "D": "D", "dinf": "D_infinity", "D_infinity": "D_infinity"}


@dataclass(slots=True)
class QuantileEstimate:
    level: float
    point: float
    lower: float
    upper: float
    samples: int
    seed: int | None = None
    uncapped_point: float = math.nan
    uncapped_lower: float = math.nan
    uncapped_upper: float = math.nan
    cap: float = math.nan
    capped: bool = False
    floor_log10: float = math.nan
    floor_violations: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.level < 1.0:
            raise DomainError(f"Quantile level must lie in (0, 1), got {self.level}")
        if not self.lower <= self.point <= self.upper:
            raise DomainError(f"Interval [{self.lower}, {self.upper}] does not contain {self.point}")


def singular_values(M: ArrayLike) -> NDArray[np.float64]:
    """Ascending singular values of a symmetric matrix, from its eigenvalues."""

    matrix = np.asarray(M, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"Expected a square matrix, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    if matrix.size and np.max(np.abs(matrix - matrix.T)) > 1e-12 * scale:
        raise DomainError("Matrix is not symmetric")
    return np.sort(np.abs(np.linalg.eigvalsh(matrix)))


def sample_sigma_min(
    n: int,
    Q: float | None,
    flavor: str,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> float:
    """One draw of the smallest singular value of D (lazy schedule) or D_inf."""

    kind = _phi_flavor(flavor)
    if kind == "D_infinity":
        matrix = d_infinity(n, rng)
    else:
        if Q is None or Q <= 0:
            raise DomainError(f"Sampling D needs Q > 0, got {Q}")
        matrix = d_matrix(sample_induced_spec(n, Q, config.default_epsilon, "lazy", rng))
    return float(singular_values(matrix.D)[0])


def phi_from_samples(
    sigma_min: ArrayLike,
    n: int,
    confidence: float = DEFAULT_CONFIG.confidence,
    seed: int | None = None,
    config: LabConfig = DEFAULT_CONFIG,
) -> QuantileEstimate:
    values = np.asarray(sigma_min, dtype=float).reshape(-1)
    if values.size < config.min_samples:
        raise DomainError(f"phi estimate needs at least {config.min_samples} samples, got {values.size}")
    level = 1.0 / math.sqrt(n)
    point, lower, upper = quantile_interval(values, level, confidence)
    log_cap = -30 * math.log(2 * n)
    cap = math.exp(log_cap)
    capped = point > cap
    if capped:
        logger.info("phi estimate %.3e exceeds its cap; reporting (2n)^-30", point)
    floor = dinf_floor_log10(plane_count(n))
    with np.errstate(divide="ignore"):
        violations = int(np.count_nonzero(np.log10(values) < floor))
    return QuantileEstimate(
        level=level,
        point=min(point, cap),
        lower=min(lower, cap),
        upper=min(upper, cap),
        samples=values.size,
        seed=seed,
        uncapped_point=point,
        uncapped_lower=lower,
        uncapped_upper=upper,
        cap=cap,
        capped=capped,
        floor_log10=floor,
        floor_violations=violations,
    )


def phi_estimate(
    n: int,
    Q: float | None,
    flavor: str,
    samples: int,
    rng: np.random.Generator,
    confidence: float = DEFAULT_CONFIG.confidence,
    seed: int | None = None,
    config: LabConfig = DEFAULT_CONFIG,
) -> QuantileEstimate:
    """Monte Carlo (1/sqrt n)-quantile of sigma_1 with exact binomial bounds, capped at (2n)^-30."""

    if samples < config.min_samples:
        raise DomainError(f"phi estimate needs at least {config.min_samples} samples, got {samples}")
    values = [sample_sigma_min(n, Q, flavor, rng, config) for _ in range(samples)]
    return phi_from_samples(values, n, confidence, seed, config)


def _phi_flavor(flavor: str) -> str:
    try:
        return PHI_FLAVORS[flavor]
    except KeyError:
        raise DomainError(f"Unknown matrix flavor '{flavor}'; expected one of {sorted(PHI_FLAVORS)}") from None
