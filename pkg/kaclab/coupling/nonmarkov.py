"""Non-Markovian coupling: scaffold construction, induced-map inversion and coalescence."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import DEFAULT_CONFIG, LabConfig
from ..errors import (
    CouplingNumericsExhausted,
    DegenerateVolumeError,
    DomainError,
    SingularJacobianError,
)
from ..group.so_n import Matrix, plane_axes_table, rotate_rows, skew_coordinates
from ..jacobian.induced_map import InducedMapSpec, induced_map_eval, left_derivatives, log_gram_volume
from .contractive import CouplingTrace, couple_along
from .schedules import draw_scheduled_planes

logger = logging.getLogger(__name__)

Result = TypeVar("Result")


@dataclass(slots=True)
class InversionResult:
    x: NDArray[np.float64]
    converged: bool
    iterations: int
    residual: float


@dataclass(slots=True)
class CoalescenceResult:
    delta_x: NDArray[np.float64]
    delta_y: NDArray[np.float64]
    coalesced: bool
    proposals: int
    solver_failures: int


def build_nm_coupling(
    X0: ArrayLike,
    Y0: ArrayLike,
    Q: float,
    epsilon: float,
    flavor: str,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> tuple[InducedMapSpec, InducedMapSpec, CouplingTrace]:
    """Scaffold two walks with the contractive coupling along a scheduled plane sequence."""

    base_x = np.asarray(X0, dtype=float)
    base_y = np.asarray(Y0, dtype=float)
    if base_x.shape != base_y.shape:
        raise DomainError(f"Base points differ in shape: {base_x.shape} vs {base_y.shape}")
    if not 0.0 < epsilon < math.pi:
        raise DomainError(f"Perturbation half-width must lie in (0, pi), got {epsilon}")
    planes, schedule = draw_scheduled_planes(base_x.shape[0], flavor, Q, rng)
    eta_x = rng.uniform(0.0, 2 * math.pi, size=planes.size)
    eta_y, distances, _, _ = couple_along(base_x, base_y, planes, eta_x, config)
    spec_a = InducedMapSpec(base_x, schedule.horizon, schedule.marked_times, planes, eta_x, epsilon)
    spec_b = InducedMapSpec(base_y, schedule.horizon, schedule.marked_times, planes, eta_y, epsilon)
    trace = CouplingTrace(dist_main=np.full(distances.size, np.nan), dist_scaffold=distances)
    return spec_a, spec_b, trace


def sample_induced_spec(
    n: int,
    Q: float | None,
    c: float,
    flavor: str,
    rng: np.random.Generator,
    base: ArrayLike | None = None,
) -> InducedMapSpec:
    """A fresh induced map over a scheduled uniform plane sequence with uniform base angles."""

    planes, schedule = draw_scheduled_planes(n, flavor, Q, rng)
    eta = rng.uniform(0.0, 2 * math.pi, size=planes.size)
    point = np.eye(n) if base is None else np.asarray(base, dtype=float)
    return InducedMapSpec(point, schedule.horizon, schedule.marked_times, planes, eta, c)


def invert_induced_map(
    spec: InducedMapSpec,
    target: ArrayLike,
    x0: ArrayLike,
    config: LabConfig = DEFAULT_CONFIG,
) -> InversionResult:
    """Gauss-Newton solve of f(x) = target in perturbation coordinates.

    Each step solves sum_j dx_j L_j = P(f(x)^T target - I) in the a-basis,
    where L_j are the left-translated partial derivatives.
    """

    goal = np.asarray(target, dtype=float)
    x = np.array(x0, dtype=float, copy=True).reshape(-1)
    if x.size != spec.dimension:
        raise DomainError(f"Initial guess must have {spec.dimension} coordinates, got {x.size}")
    if np.max(np.abs(x)) > spec.c * (1.0 + 1e-12):
        raise DomainError("Initial guess lies outside the perturbation box")
    limit = config.newton_box_inflation * spec.c
    residual = math.inf
    for iteration in range(config.newton_max_iterations + 1):
        endpoint, derivatives = left_derivatives(spec, x)
        residual = float(np.linalg.norm(endpoint - goal))
        if residual <= config.newton_tolerance:
            return InversionResult(x, True, iteration, residual)
        if iteration == config.newton_max_iterations:
            break
        jacobian = np.stack([skew_coordinates(matrix) for matrix in derivatives], axis=1)
        singular = np.linalg.svd(jacobian, compute_uv=False)
        if singular[-1] < config.singular_threshold:
            raise SingularJacobianError(
                f"Induced-map derivative is singular (sigma_min={singular[-1]:.3e})", float(singular[-1])
            )
        step, *_ = np.linalg.lstsq(jacobian, skew_coordinates(endpoint.T @ goal), rcond=None)
        x = x + step
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > limit:
            logger.debug("Newton iterate left the inflated box after %d steps", iteration + 1)
            return InversionResult(x, False, iteration + 1, residual)
    logger.debug("Newton solve did not converge (residual %.3e)", residual)
    return InversionResult(x, False, config.newton_max_iterations, residual)


def coalesce_attempt(
    spec_a: InducedMapSpec,
    spec_b: InducedMapSpec,
    rng: np.random.Generator,
    config: LabConfig = DEFAULT_CONFIG,
) -> CoalescenceResult:
    """Maximal coupling of the pushforwards of uniform perturbations under f_A and f_B.

    First draw dx uniform and keep dy = f_B^{-1}(f_A(dx)) with probability
    min(1, J_A(dx) / J_B(dy)). Otherwise draw dy' uniform until one is kept
    with probability 1 - min(1, J_B(dy') / J_A(f_A^{-1}(f_B(dy')))).
    """

    _check_compatible(spec_a, spec_b)
    budget = _Budget(config)
    c, size = spec_a.c, spec_a.dimension

    delta_x = rng.uniform(-c, c, size=size)
    budget.propose()
    log_ratio = -math.inf
    candidate = budget.attempt(lambda: _solve_in_box(spec_b, induced_map_eval(spec_a, delta_x), delta_x, config))
    if candidate is not None:
        volumes = budget.attempt(lambda: (log_gram_volume(spec_a, delta_x), log_gram_volume(spec_b, candidate)))
        if volumes is not None:
            log_ratio = volumes[0] - volumes[1]
    if rng.uniform() < math.exp(min(0.0, log_ratio)):
        return CoalescenceResult(delta_x, candidate, True, budget.proposals, budget.failures)

    while True:
        delta_y = rng.uniform(-c, c, size=size)
        budget.propose()
        volume_b = budget.attempt(lambda: log_gram_volume(spec_b, delta_y))
        if volume_b is None:
            continue
        preimage = budget.attempt(lambda: _solve_in_box(spec_a, induced_map_eval(spec_b, delta_y), delta_y, config))
        ratio = 0.0
        if preimage is not None:
            volume_a = budget.attempt(lambda: log_gram_volume(spec_a, preimage))
            if volume_a is None:
                continue
            ratio = math.exp(min(0.0, volume_b - volume_a))
        if rng.uniform() < 1.0 - ratio:
            return CoalescenceResult(delta_x, delta_y, False, budget.proposals, budget.failures)


def complete_trace(
    trace: CouplingTrace,
    spec_a: InducedMapSpec,
    spec_b: InducedMapSpec,
    result: CoalescenceResult,
) -> CouplingTrace:
    """Fill main-chain distances from the perturbed angle sequences."""

    _check_compatible(spec_a, spec_b)
    rows, cols = plane_axes_table(spec_a.n)
    angles_x = spec_a.endpoint_angles(result.delta_x)
    angles_y = spec_b.endpoint_angles(result.delta_y)
    X, Y = spec_a.X.copy(), spec_b.X.copy()
    distances = np.empty(spec_a.T + 1)
    distances[0] = np.linalg.norm(X - Y)
    for t, plane in enumerate(spec_a.planes.tolist()):
        _rotate(X, rows, cols, plane, angles_x[t])
        _rotate(Y, rows, cols, plane, angles_y[t])
        distances[t + 1] = np.linalg.norm(X - Y)
    extras = dict(trace.extras)
    extras["final_gap"] = float(distances[-1])
    if result.coalesced:
        distances[-1] = 0.0
    return CouplingTrace(
        dist_main=distances,
        dist_scaffold=trace.dist_scaffold.copy(),
        coalesced=result.coalesced,
        coalescence_step=spec_a.T if result.coalesced else None,
        extras=extras,
    )


class _Budget:
    """Counts proposals and numerical failures against the configured limits."""

    def __init__(self, config: LabConfig) -> None:
        self.config = config
        self.proposals = 0
        self.failures = 0
        self.last_error = ""

    def propose(self) -> None:
        self.proposals += 1
        if self.proposals > self.config.max_proposals:
            self._exhausted("proposal cap reached")

    def attempt(self, action: Callable[[], Result]) -> Result | None:
        try:
            return action()
        except (SingularJacobianError, DegenerateVolumeError) as error:
            self.failures += 1
            self.last_error = str(error)
            logger.warning("Coalescence solver failure %d: %s", self.failures, error)
            if self.failures > self.config.solver_retry_budget:
                self._exhausted("solver retry budget exceeded")
            return None

    def _exhausted(self, reason: str) -> None:
        raise CouplingNumericsExhausted(
            f"Coupling numerics exhausted: {reason}",
            {"proposals": self.proposals, "failures": self.failures, "last_error": self.last_error},
        )


def _solve_in_box(
    spec: InducedMapSpec,
    target: Matrix,
    guess: NDArray[np.float64],
    config: LabConfig,
) -> NDArray[np.float64] | None:
    result = invert_induced_map(spec, target, guess, config)
    if not result.converged or np.max(np.abs(result.x)) > spec.c:
        return None
    return result.x


def _check_compatible(spec_a: InducedMapSpec, spec_b: InducedMapSpec) -> None:
    if (
        spec_a.n != spec_b.n
        or spec_a.T != spec_b.T
        or spec_a.c != spec_b.c
        or not np.array_equal(spec_a.S, spec_b.S)
        or not np.array_equal(spec_a.planes, spec_b.planes)
    ):
        raise DomainError("Induced maps must share dimension, horizon, marked times, planes and box")


def _rotate(X: Matrix, rows: NDArray[np.intp], cols: NDArray[np.intp], plane: int, angle: float) -> None:
    rotate_rows(X, rows[plane - 1], cols[plane - 1], math.cos(angle), math.sin(angle))
