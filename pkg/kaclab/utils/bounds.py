"""Mixing-time bound calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..config import DEFAULT_CONFIG, LabConfig
from ..errors import DomainError
from ..group.so_n import plane_count

if TYPE_CHECKING:
    from ..randmat.singular import QuantileEstimate

LOG_CONVENTION = "log(n/phi)"


@dataclass(slots=True)
class MixingBoundReport:
    n: int
    phi: float
    lower_bound_steps: int
    paper_upper_steps: float
    phi_based_upper: float
    intermediate_upper: float
    constant: float
    intermediate_q: float
    log_convention: str = LOG_CONVENTION
    notes: list[str] = field(default_factory=list)


def mixing_bound_report(
    n: int,
    phi: "QuantileEstimate | float",
    config: LabConfig = DEFAULT_CONFIG,
) -> MixingBoundReport:
    value = float(getattr(phi, "point", phi))
    if not 0.0 < value < 1.0:
        raise DomainError(f"phi must lie in (0, 1), got {value}")
    log_n = math.log(n)
    q = config.intermediate_q
    return MixingBoundReport(
        n=n,
        phi=value,
        lower_bound_steps=plane_count(n),
        paper_upper_steps=1e7 * n**4 * log_n,
        phi_based_upper=config.bound_constant * n * n * math.log(n / value),
        intermediate_upper=8 * q * n**4 * log_n + 5 * n * n * log_n + 900 * n * n * math.log(1 / value),
        constant=config.bound_constant,
        intermediate_q=q,
        notes=[
            "lower_bound_steps: below N steps the walk sits on a measure-zero set (exact)",
            "paper_upper_steps: 1e7 n^4 log n, the proved headline bound",
            f"phi_based_upper: C n^2 {LOG_CONVENTION} with C={config.bound_constant:g}; "
            "the normalisation is stated both as n^2 log(n phi) and O(n^2 log phi), neither fixes C",
            f"intermediate_upper: 8Q n^4 log n + 5 n^2 log n + 900 n^2 log(1/phi) with Q={q:g}",
        ],
    )


def dinf_floor_log10(N: int) -> float:
    """log10 of N^-N (4 N^21)^(-4(N+1)), the smallest-singular-value floor for D_inf."""

    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    return -N * math.log10(N) - 4 * (N + 1) * (math.log10(4) + 21 * math.log10(N))
