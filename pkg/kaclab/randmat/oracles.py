"""Monte Carlo oracles for the matrix, map and anti-concentration inequalities."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import DEFAULT_CONFIG, LabConfig, oracle_sweep
from ..coupling.nonmarkov import sample_induced_spec
from ..coupling.schedules import draw_scheduled_planes, lazy_gap
from ..errors import DomainError
from ..group.so_n import haar_sample, mat_exp_skew, plane_count
from ..jacobian.induced_map import derivative_map, gram_matrix, induced_map_eval, left_derivatives
from ..jacobian.matrices import d_matrix
from ..walk.chain import UpdateSequence, WalkState, random_update_sequence, run_walk

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class InequalityReport:
    lemma: str
    trials: int
    violations: int
    worst_slack: float
    parameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not math.isfinite(self.worst_slack):
            raise DomainError(f"Worst slack must be finite, got {self.worst_slack}")

    @property
    def passed(self) -> bool:
        return self.violations == 0

    @classmethod
    def merge(cls, reports: Iterable["InequalityReport"], lemma: str | None = None) -> "InequalityReport":
        members = list(reports)
        if not members:
            raise DomainError("Cannot merge an empty list of reports")
        return cls(
            lemma=lemma or members[0].lemma,
            trials=sum(report.trials for report in members),
            violations=sum(report.violations for report in members),
            worst_slack=min(report.worst_slack for report in members),
            parameters={"members": [report.parameters for report in members]},
        )


def telescoping_oracle(
    k: int,
    n: int,
    rng: np.random.Generator,
    trials: int = 100,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """||prod Q - prod P|| <= sum_i ||Q_1..Q_{i-1}||_op ||Q_i - P_i|| ||P_{i+1}..P_k||_op.

    Half the trials use uniform [-1, 1] entries, half use Haar rotations with
    nearby perturbations.
    """

    if k < 1:
        raise DomainError(f"Need at least one factor, got k={k}")
    values = np.empty(trials)
    bounds = np.empty(trials)
    for trial in range(trials):
        if trial % 2 == 0:
            P = rng.uniform(-1.0, 1.0, size=(k, n, n))
            Q = rng.uniform(-1.0, 1.0, size=(k, n, n))
        else:
            P = np.stack([haar_sample(n, rng) for _ in range(k)])
            Q = P + rng.uniform(-0.1, 0.1, size=(k, n, n))
        values[trial], bounds[trial] = _telescoping_sides(P, Q)
    return _report("telescoping", values, bounds, {"k": k, "n": n}, config)


def determinant_ratio_deviation(M1: ArrayLike, M2: ArrayLike) -> float:
    """|det(M2)/det(M1) - 1| computed in log space."""

    sign1, log1 = np.linalg.slogdet(np.asarray(M1, dtype=float))
    sign2, log2 = np.linalg.slogdet(np.asarray(M2, dtype=float))
    if sign1 == 0:
        raise DomainError("Reference matrix is singular")
    return abs(sign1 * sign2 * math.exp(log2 - log1) - 1.0)


def determinant_ratio_oracle(
    N: int,
    delta: float,
    rng: np.random.Generator,
    trials: int = 1000,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """Determinant ratio under a perturbation with ||M1 - M2||_op <= delta sigma_1(M1).

    The verdict uses the eigenvalue-perturbation bound (1 + delta)^N - 1; the
    tighter N^(N/2) delta^N form fails already for M2 = (1 + delta) M1, so its
    violations are only counted in the parameters.
    """

    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    values = np.empty(trials)
    stated = N ** (N / 2) * delta**N
    for trial in range(trials):
        M1 = _well_conditioned_symmetric(N, rng)
        sigma_1 = float(np.min(np.abs(np.linalg.eigvalsh(M1))))
        E = rng.uniform(-1.0, 1.0, size=(N, N))
        E = E + E.T
        E *= rng.uniform(0.0, 1.0) * delta * sigma_1 / np.linalg.norm(E, ord=2)
        values[trial] = determinant_ratio_deviation(M1, M1 + E)
    bounds = np.full(trials, (1.0 + delta) ** N - 1.0)
    parameters = {
        "N": N,
        "delta": delta,
        "bound": "(1+delta)^N - 1",
        "stated_bound": stated,
        "stated_bound_violations": int(np.count_nonzero(values > stated + config.inequality_tolerance)),
    }
    return _report("determinant", values, bounds, parameters, config)


def small_ball_oracle(
    alpha: float,
    beta: float,
    density_bound: float,
    epsilon: float,
    x: float,
    samples: int,
    rng: np.random.Generator,
    sampler: Callable[[np.random.Generator, int], NDArray[np.float64]] | None = None,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """P[|alpha X^2 + beta X - x| < eps] <= 4 C sqrt(eps) / sqrt(|alpha|), with 3 sigma slack."""

    if alpha == 0:
        raise DomainError("alpha must be non-zero")
    draws = rng.uniform(0.0, 1.0, size=samples) if sampler is None else sampler(rng, samples)
    hits = np.abs(alpha * draws**2 + beta * draws - x) < epsilon
    estimate = float(hits.mean())
    sigma = math.sqrt(estimate * (1.0 - estimate) / samples)
    bound = 4.0 * density_bound * math.sqrt(epsilon) / math.sqrt(abs(alpha))
    parameters = {
        "alpha": alpha,
        "beta": beta,
        "C": density_bound,
        "epsilon": epsilon,
        "x": x,
        "samples": samples,
        "estimate": estimate,
        "sigma": sigma,
    }
    return _report("small-ball", np.array([estimate - 3 * sigma]), np.array([bound]), parameters, config)


def small_ball_sweep(samples: int, rng: np.random.Generator, config: LabConfig = DEFAULT_CONFIG) -> InequalityReport:
    """Sweep the default grid at x = 0 and at the critical value of the quadratic."""

    reports = []
    for alpha, beta, epsilon in oracle_sweep("small-ball"):
        for x in (0.0, -beta * beta / (4 * alpha)):
            reports.append(small_ball_oracle(alpha, beta, 1.0, epsilon, x, samples, rng, config=config))
    return InequalityReport.merge(reports, "small-ball")


def exponential_approximation_oracle(
    n: int,
    c: float,
    trials: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """||f(x) - f(0) exp(sum_j x_j L_j)||_HS <= 8 N^2 c^2 on random greedy induced maps."""

    values = np.empty(trials)
    squared = np.empty(trials)
    N = plane_count(n)
    for trial in range(trials):
        spec = sample_induced_spec(n, None, c, "greedy", rng, base=haar_sample(n, rng))
        origin, derivatives = left_derivatives(spec, np.zeros(spec.dimension))
        x = rng.uniform(-c, c, size=spec.dimension)
        approximation = origin @ mat_exp_skew(np.tensordot(x, derivatives, axes=1))
        values[trial] = np.linalg.norm(induced_map_eval(spec, x) - approximation)
        squared[trial] = values[trial] ** 2
    bounds = np.full(trials, 8.0 * N * N * c * c)
    parameters = {"n": n, "c": c, "max_squared": float(squared.max()), "max_unsquared": float(values.max())}
    return _report("exponential", values, bounds, parameters, config)


def tangent_closeness_oracle(
    n: int,
    c: float,
    trials: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """||df_x(h) - df_y(h)||_HS <= 4 N^2 c for unit h and x, y in the box."""

    values = np.empty(trials)
    N = plane_count(n)
    for trial in range(trials):
        spec = sample_induced_spec(n, None, c, "greedy", rng, base=haar_sample(n, rng))
        h = rng.standard_normal(spec.dimension)
        h /= np.linalg.norm(h)
        x = rng.uniform(-c, c, size=spec.dimension)
        y = rng.uniform(-c, c, size=spec.dimension)
        values[trial] = np.linalg.norm(derivative_map(spec, x, h) - derivative_map(spec, y, h))
    return _report("tangent", values, np.full(trials, 4.0 * N * N * c), {"n": n, "c": c}, config)


def path_closeness_oracle(
    n: int,
    T: int,
    epsilon: float,
    trials: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """Walks sharing planes with angles within eps per step end within 6 T eps."""

    values = np.empty(trials)
    for trial in range(trials):
        start = WalkState(haar_sample(n, rng))
        sequence = random_update_sequence(n, T, rng)
        shifted = np.mod(sequence.angles + rng.uniform(-epsilon, epsilon, size=T), 2 * math.pi)
        twin = UpdateSequence(n, sequence.planes, np.where(shifted >= 2 * math.pi, 0.0, shifted))
        values[trial] = np.linalg.norm(run_walk(start, sequence, config).X - run_walk(start, twin, config).X)
    bounds = np.full(trials, 6.0 * T * epsilon)
    return _report("path-closeness", values, bounds, {"n": n, "T": T, "epsilon": epsilon}, config)


def lazy_tail_oracle(
    n: int,
    Q: float,
    k: float,
    trials: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """P[s_N - (N-1) gap > k N^2] <= exp(-N/4) for k >= 2, with 3 sigma slack."""

    if k < 2:
        raise DomainError(f"Tail multiple must be at least 2, got {k}")
    N = plane_count(n)
    forced = (N - 1) * lazy_gap(n, Q)
    exceed = np.empty(trials, dtype=bool)
    for trial in range(trials):
        _, schedule = draw_scheduled_planes(n, "lazy", Q, rng)
        exceed[trial] = schedule.marked_times[-1] - forced > k * N * N
    estimate = float(exceed.mean())
    sigma = math.sqrt(estimate * (1.0 - estimate) / trials)
    parameters = {"n": n, "Q": Q, "k": k, "estimate": estimate, "sigma": sigma}
    return _report(
        "schedule-tail", np.array([estimate - 3 * sigma]), np.array([math.exp(-N / 4)]), parameters, config
    )


def jacobian_formula_oracle(
    n: int,
    trials: int,
    rng: np.random.Generator,
    Q: float = 0.5,
    tolerance: float = 1e-8,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """max |<df_0(e_i), df_0(e_j)> - 2 D[i, j]| stays below *tolerance* on lazy induced maps."""

    values = np.empty(trials)
    for trial in range(trials):
        spec = sample_induced_spec(n, Q, config.default_epsilon, "lazy", rng, base=haar_sample(n, rng))
        gram = gram_matrix(spec, np.zeros(spec.dimension))
        values[trial] = np.max(np.abs(gram - 2.0 * d_matrix(spec).D))
    return _report("jacobian-formula", values, np.full(trials, tolerance), {"n": n, "Q": Q}, config)


def sphere_conditional_density_check(
    n: int,
    k: int,
    samples: int,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> InequalityReport:
    """Estimate P[1 - X_H <= n^-20] and P[|v+|^2 <= n^-5] against n^-2.

    X and v_1, ..., v_{n-1} are uniform on the sphere, H is spanned by
    v_1, ..., v_k and v+ is the component of v_{n-1} orthogonal to H.
    """

    if not 0 <= k <= n - 2:
        raise DomainError(f"k must lie in 0..{n - 2}, got {k}")
    X = _sphere_points(rng, samples, n)
    last = _sphere_points(rng, samples, n)
    if k == 0:
        captured = np.zeros(samples)
        residual = last
    else:
        spanning = np.stack([_sphere_points(rng, samples, n) for _ in range(k)], axis=2)
        basis, _ = np.linalg.qr(spanning)
        coefficients = np.einsum("snk,sn->sk", basis, X)
        captured = np.sum(coefficients**2, axis=1)
        residual = last - np.einsum("snk,sk->sn", basis, np.einsum("snk,sn->sk", basis, last))
    residual_sq = np.sum(residual**2, axis=1)
    gap = np.clip(1.0 - captured, 0.0, None)
    rates = np.array([np.mean(gap <= n**-20.0), np.mean(residual_sq <= n**-5.0)])
    sigmas = np.sqrt(rates * (1.0 - rates) / samples)
    with np.errstate(divide="ignore"):
        density = 2.0 / (math.pi * np.sqrt(residual_sq * gap))
    parameters = {
        "n": n,
        "k": k,
        "samples": samples,
        "p_gap": float(rates[0]),
        "p_residual": float(rates[1]),
        "density_quantiles": {
            str(q): float(np.quantile(density, q)) for q in (0.5, 0.9, 0.99)
        },
    }
    return _report("sphere-density", rates - 3 * sigmas, np.full(2, float(n) ** -2), parameters, config)


def _report(
    lemma: str,
    values: NDArray[np.float64],
    bounds: NDArray[np.float64],
    parameters: dict[str, Any],
    config: LabConfig,
) -> InequalityReport:
    slack = bounds - values
    violations = int(np.count_nonzero(values > bounds + config.inequality_tolerance))
    if violations:
        logger.warning("%s: %d of %d trials violate the bound", lemma, violations, values.size)
    return InequalityReport(
        lemma=lemma,
        trials=int(values.size),
        violations=violations,
        worst_slack=float(np.min(slack)),
        parameters=parameters,
    )


def _telescoping_sides(P: NDArray[np.float64], Q: NDArray[np.float64]) -> tuple[float, float]:
    k, n, _ = P.shape
    left = [np.eye(n)]
    for i in range(k):
        left.append(left[-1] @ Q[i])
    right = [np.eye(n)]
    for i in range(k - 1, -1, -1):
        right.append(P[i] @ right[-1])
    right.reverse()
    value = float(np.linalg.norm(left[k] - right[0]))
    bound = sum(
        np.linalg.norm(left[i], ord=2) * np.linalg.norm(Q[i] - P[i]) * np.linalg.norm(right[i + 1], ord=2)
        for i in range(k)
    )
    return value, float(bound)


def _well_conditioned_symmetric(N: int, rng: np.random.Generator) -> NDArray[np.float64]:
    while True:
        M = rng.uniform(-1.0, 1.0, size=(N, N))
        M = M + M.T
        eigenvalues = np.abs(np.linalg.eigvalsh(M))
        if eigenvalues.min() > 1e-3 * eigenvalues.max():
            return M


def _sphere_points(rng: np.random.Generator, samples: int, n: int) -> NDArray[np.float64]:
    points = rng.standard_normal((samples, n))
    return points / np.linalg.norm(points, axis=1, keepdims=True)
