"""Statistical diagnostics: KS distances, quantile intervals, contraction fits and schedule times."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from ..config import DEFAULT_CONFIG, LabConfig
from ..coupling.contractive import CouplingTrace
from ..coupling.schedules import draw_scheduled_planes, lazy_gap
from ..errors import DomainError
from ..group.so_n import haar_marginal_cdf, plane_count
from ..walk.chain import walk_states

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class ContractionFit:
    slope: float
    intercept: float
    r_squared: float
    points: int


@dataclass(slots=True)
class ScheduleTimeStats:
    flavor: str
    n: int
    trials: int
    mean: float
    variance: float
    standard_error: float
    times: NDArray[np.int64]
    cdf_grid: pd.DataFrame | None = None
    waits: NDArray[np.int64] | None = None


@dataclass(slots=True)
class GeometricFit:
    statistic: float
    p_value: float
    bins: int


@dataclass(slots=True)
class TVProxy:
    T: int
    ks: float
    rank_deficient: bool


def ks_statistic(samples: ArrayLike, cdf: Callable[[NDArray[np.float64]], ArrayLike]) -> float:
    """Sup distance between the empirical CDF of *samples* and a reference CDF."""

    values = np.asarray(samples, dtype=float).reshape(-1)
    if values.size == 0:
        raise DomainError("KS statistic needs at least one sample")
    return float(stats.kstest(values, cdf).statistic)


def ks_two_sample(first: ArrayLike, second: ArrayLike) -> float:
    return float(stats.ks_2samp(np.asarray(first, dtype=float), np.asarray(second, dtype=float)).statistic)


def ks_null_band(m: int, k: int, alpha: float = 0.05) -> float:
    """Asymptotic two-sample KS critical value at level *alpha*."""

    return math.sqrt(-math.log(alpha / 2) / 2) * math.sqrt((m + k) / (m * k))


def entry_ks(states: NDArray[np.float64], n: int) -> float:
    """KS distance of the (1, 1) entries of stacked states against the Haar entry law."""

    return ks_statistic(states[:, 0, 0], lambda x: haar_marginal_cdf(n, x))


def quantile_interval(
    samples: ArrayLike,
    q: float,
    confidence: float = DEFAULT_CONFIG.confidence,
) -> tuple[float, float, float]:
    """Empirical q-quantile with an exact binomial order-statistic confidence interval."""

    if not 0.0 < q < 1.0:
        raise DomainError(f"Quantile level must lie in (0, 1), got {q}")
    ordered = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    m = ordered.size
    alpha = 1.0 - confidence
    lower_rank = int(stats.binom.ppf(alpha / 2, m, q))
    upper_rank = int(stats.binom.ppf(1 - alpha / 2, m, q)) + 1
    if lower_rank < 1 or upper_rank > m:
        raise DomainError(
            f"{m} samples are too few for a {confidence:.0%} interval on the {q:.4f}-quantile"
        )
    point_rank = min(max(math.ceil(m * q), lower_rank), upper_rank)
    return float(ordered[point_rank - 1]), float(ordered[lower_rank - 1]), float(ordered[upper_rank - 1])


def contraction_fit(trace: CouplingTrace | ArrayLike, config: LabConfig = DEFAULT_CONFIG) -> ContractionFit:
    """Least-squares fit of log distance against t over the prefix above the floor."""

    if isinstance(trace, CouplingTrace):
        main = trace.dist_main
        distances = trace.dist_scaffold if np.any(np.isnan(main)) else main
    else:
        distances = np.asarray(trace, dtype=float).reshape(-1)
    if not np.any(distances > 0):
        raise DomainError("All distances are zero; nothing to fit")
    below = np.flatnonzero(distances <= config.fit_floor)
    prefix = distances[: below[0]] if below.size else distances
    if prefix.size < config.min_fit_points:
        raise DomainError(
            f"Contraction fit needs {config.min_fit_points} positive distances, got {prefix.size}"
        )
    steps = np.arange(prefix.size, dtype=float)
    logs = np.log(prefix)
    if np.all(logs == logs[0]):
        return ContractionFit(slope=0.0, intercept=float(logs[0]), r_squared=1.0, points=prefix.size)
    fit = stats.linregress(steps, logs)
    return ContractionFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
        points=prefix.size,
    )


def gumbel_cdf(c: ArrayLike) -> NDArray[np.float64]:
    return np.exp(-np.exp(-np.asarray(c, dtype=float)))


def schedule_time_stats(
    flavor: str,
    n: int,
    Q: float | None,
    trials: int,
    rng: np.random.Generator,
    c_grid: ArrayLike | None = None,
    config: LabConfig = DEFAULT_CONFIG,
) -> ScheduleTimeStats:
    """Distribution of the last marked time s_N over fresh uniform plane sequences."""

    if trials < config.min_samples:
        raise DomainError(f"Need at least {config.min_samples} trials, got {trials}")
    times = np.empty(trials, dtype=np.int64)
    waits = None
    if flavor == "lazy" and Q is not None:
        gap = lazy_gap(n, Q)
        waits = np.empty((trials, plane_count(n)), dtype=np.int64)
    for trial in range(trials):
        _, schedule = draw_scheduled_planes(n, flavor, Q, rng)
        times[trial] = schedule.marked_times[-1]
        if waits is not None:
            # failures before each marked plane, counted from the earliest admissible step
            waits[trial] = np.diff(schedule.marked_times, prepend=-gap) - gap
    variance = float(times.var(ddof=1))
    grid = None
    if flavor == "greedy":
        N = plane_count(n)
        points = np.linspace(-2.0, 4.0, 13) if c_grid is None else np.asarray(c_grid, dtype=float)
        scaled = (times - N * math.log(N)) / N
        grid = pd.DataFrame(
            {
                "c": points,
                "empirical": [float(np.mean(scaled <= point)) for point in points],
                "reference": gumbel_cdf(points),
            }
        )
    return ScheduleTimeStats(
        flavor=flavor,
        n=n,
        trials=trials,
        mean=float(times.mean()),
        variance=variance,
        standard_error=math.sqrt(variance / trials),
        times=times,
        cdf_grid=grid,
        waits=waits,
    )


def geometric_wait_test(waits: ArrayLike, p: float, min_expected: float = 5.0) -> GeometricFit:
    """Pearson chi-square of pooled failure counts against Geometric(p) on {0, 1, ...}.

    Bins 0..K-1 each expect at least *min_expected* counts; bin K collects the tail.
    """

    values = np.asarray(waits, dtype=np.int64).reshape(-1)
    if values.size == 0:
        raise DomainError("Chi-square test needs at least one wait")
    if not 0.0 < p < 1.0:
        raise DomainError(f"Success probability must lie in (0, 1), got {p}")
    if values.min() < 0:
        raise DomainError("Waits must be non-negative")
    limit = math.log(min_expected / (values.size * p)) / math.log(1.0 - p)
    K = max(1, math.floor(limit) + 1)
    observed = np.bincount(np.minimum(values, K), minlength=K + 1)
    expected = values.size * np.append(stats.geom.pmf(np.arange(1, K + 1), p), stats.geom.sf(K, p))
    result = stats.chisquare(observed, expected)
    return GeometricFit(statistic=float(result.statistic), p_value=float(result.pvalue), bins=K + 1)


def tv_proxy(
    n: int,
    T: int,
    replicates: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> TVProxy:
    """KS lower-bound proxy for the TV distance to Haar after T steps from the identity."""

    if replicates < config.min_samples:
        raise DomainError(f"Need at least {config.min_samples} replicates, got {replicates}")
    states = walk_states(n, T, replicates, rng, config)
    return TVProxy(T=T, ks=entry_ks(states, n), rank_deficient=T < plane_count(n))
