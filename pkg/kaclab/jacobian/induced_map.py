"""The induced map of a perturbed walk, its derivative and volume factors."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..config import DEFAULT_CONFIG, LabConfig
from ..errors import DegenerateVolumeError, DomainError
from ..group.so_n import (
    SQRT2,
    Matrix,
    basis_element,
    plane_axes_table,
    plane_count,
    rotate_rows,
    rotation_matrix,
    skew_coordinates,
    wrap_angle,
)

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class InducedMapSpec:
    """Base point, horizon, marked times, planes and base angles of a perturbed walk.

    Marked times are zero-based step indices; planes are 1-based. The map
    f(x) applies R(planes[t], eta[t] + x_l) at t = S[l] and R(planes[t], eta[t])
    elsewhere, then multiplies the base point on the left.
    """

    X: Matrix
    T: int
    S: NDArray[np.int64]
    planes: NDArray[np.int64]
    eta: NDArray[np.float64]
    c: float

    def __post_init__(self) -> None:
        self.X = np.array(self.X, dtype=float, copy=True)
        if self.X.ndim != 2 or self.X.shape[0] != self.X.shape[1]:
            raise DomainError(f"Base point must be square, got shape {self.X.shape}")
        N = plane_count(self.X.shape[0])
        self.S = np.asarray(self.S, dtype=np.int64).reshape(-1)
        self.planes = np.asarray(self.planes, dtype=np.int64).reshape(-1)
        self.eta = np.asarray(wrap_angle(np.asarray(self.eta, dtype=float).reshape(-1))).reshape(-1)
        if self.planes.size != self.T or self.eta.size != self.T:
            raise DomainError(
                f"Plane and angle sequences must have length T={self.T}, got {self.planes.size} and {self.eta.size}"
            )
        if self.S.size == 0:
            raise DomainError("An induced map needs at least one marked time")
        if np.any(np.diff(self.S) <= 0) or self.S[0] < 0 or self.S[-1] >= self.T:
            raise DomainError(f"Marked times must be strictly increasing within [0, {self.T})")
        if self.planes.min() < 1 or self.planes.max() > N:
            raise DomainError(f"Plane indices must lie in 1..{N}")
        if not 0.0 < self.c < math.pi:
            raise DomainError(f"Perturbation half-width must lie in (0, pi), got {self.c}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        """Number of perturbation coordinates."""

        return int(self.S.size)

    @property
    def generator_planes(self) -> NDArray[np.int64]:
        return self.planes[self.S]

    def endpoint_angles(self, x: ArrayLike) -> NDArray[np.float64]:
        """Step angles with the perturbation added at the marked times."""

        angles = self.eta.copy()
        angles[self.S] = np.asarray(wrap_angle(angles[self.S] + _as_point(self, x))).reshape(-1)
        return angles


@dataclass(slots=True)
class BlockFactorization:
    """f(x) = tail · E_m R_m ··· E_1 R_1 · base with E_k = exp((theta_k + x_k) b_k)."""

    unmarked: NDArray[np.float64]
    theta: NDArray[np.float64]
    planes: NDArray[np.int64]
    tail: Matrix
    base: Matrix

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def generators(self) -> NDArray[np.float64]:
        """b_k = sqrt(2) a_{i(s_k)}, stacked."""

        return np.stack([SQRT2 * basis_element(self.n, int(plane)) for plane in self.planes])

    def marked_rotation(self, k: int, x_k: float = 0.0) -> Matrix:
        return rotation_matrix(self.n, int(self.planes[k]), float(self.theta[k]) + x_k)

    def prefixes(self, x: ArrayLike) -> tuple[Matrix, NDArray[np.float64]]:
        """Return f(x) and the states R_k E_{k-1} ··· base just before each marked rotation."""

        point = np.asarray(x, dtype=float).reshape(-1)
        if point.size != self.theta.size:
            raise DomainError(f"Expected {self.theta.size} perturbation coordinates, got {point.size}")
        states = np.empty((self.theta.size, self.n, self.n))
        current = self.base
        for k in range(self.theta.size):
            current = self.unmarked[k] @ current
            states[k] = current
            current = self.marked_rotation(k, float(point[k])) @ current
        return self.tail @ current, states

    def compose(self, x: ArrayLike) -> Matrix:
        return self.prefixes(x)[0]


def induced_map_eval(spec: InducedMapSpec, x: ArrayLike) -> Matrix:
    point = _checked_point(spec, x)
    return _evaluate(spec, point)


def block_factorize(spec: InducedMapSpec) -> BlockFactorization:
    n = spec.n
    rows, cols = plane_axes_table(n)
    marked = spec.S.tolist()
    boundaries = [-1, *marked]
    unmarked = np.empty((len(marked), n, n))
    for k in range(len(marked)):
        unmarked[k] = _product(rows, cols, spec.planes, spec.eta, boundaries[k] + 1, boundaries[k + 1], n)
    tail = _product(rows, cols, spec.planes, spec.eta, marked[-1] + 1, spec.T, n)
    return BlockFactorization(
        unmarked=unmarked,
        theta=spec.eta[spec.S].copy(),
        planes=spec.generator_planes.copy(),
        tail=tail,
        base=spec.X.copy(),
    )


def left_derivatives(spec: InducedMapSpec, x: ArrayLike) -> tuple[Matrix, NDArray[np.float64]]:
    """Return f(x) and L_j = f(x)^{-1} ∂f/∂x_j, one skew matrix per coordinate."""

    return _left_derivatives(spec, _as_point(spec, x))


def derivative_map(spec: InducedMapSpec, x: ArrayLike, h: ArrayLike) -> Matrix:
    """df_x(h): the sum over blocks of the product with b_j inserted at block j."""

    point = _checked_point(spec, x)
    direction = np.asarray(h, dtype=float).reshape(-1)
    if direction.size != spec.dimension:
        raise DomainError(f"Direction must have {spec.dimension} coordinates, got {direction.size}")
    endpoint, derivatives = _left_derivatives(spec, point)
    return endpoint @ np.tensordot(direction, derivatives, axes=1)


def gram_matrix(spec: InducedMapSpec, x: ArrayLike) -> NDArray[np.float64]:
    """G[i, j] = <df_x(e_i), df_x(e_j)>_HS."""

    _, derivatives = _left_derivatives(spec, _checked_point(spec, x))
    coordinates = np.stack([skew_coordinates(matrix) for matrix in derivatives])
    return coordinates @ coordinates.T


def log_gram_volume(spec: InducedMapSpec, x: ArrayLike) -> float:
    sign, logdet = np.linalg.slogdet(gram_matrix(spec, x))
    if sign <= 0 or not math.isfinite(logdet):
        logger.debug("Degenerate Gram matrix at x=%s for T=%d (sign=%s)", np.asarray(x).tolist(), spec.T, sign)
        raise DegenerateVolumeError(f"Gram matrix is not positive definite (sign={sign}, logdet={logdet})")
    return 0.5 * float(logdet)


def gram_volume(spec: InducedMapSpec, x: ArrayLike) -> float:
    return math.exp(log_gram_volume(spec, x))


def numerical_rank(
    X0: ArrayLike,
    planes: ArrayLike,
    angles: ArrayLike,
    offset: ArrayLike | None = None,
    config: LabConfig = DEFAULT_CONFIG,
) -> int:
    """Rank of the derivative of the t-step walk endpoint with respect to all t angles.

    Columns are a-basis coordinates of the left-translated partial derivatives,
    evaluated at angles + offset.
    """

    base = np.asarray(X0, dtype=float)
    plane_seq = np.asarray(planes, dtype=np.int64).reshape(-1)
    angle_seq = np.asarray(angles, dtype=float).reshape(-1)
    if plane_seq.size != angle_seq.size:
        raise DomainError("Plane and angle prefixes must have equal length")
    t = plane_seq.size
    if t == 0:
        return 0
    if offset is not None:
        angle_seq = angle_seq + np.asarray(offset, dtype=float).reshape(-1)
    n = base.shape[0]
    rows, cols = plane_axes_table(n)
    _, states = _trajectory(base, plane_seq, angle_seq, np.arange(t), rows, cols)
    columns = np.stack(
        [skew_coordinates(_conjugated_generator(state, int(plane), rows, cols)) for state, plane in zip(states, plane_seq)],
        axis=1,
    )
    singular = np.linalg.svd(columns, compute_uv=False)
    if singular.size == 0 or singular[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular > config.rank_tolerance * singular[0]))


def _evaluate(spec: InducedMapSpec, point: NDArray[np.float64]) -> Matrix:
    rows, cols = plane_axes_table(spec.n)
    endpoint, _ = _trajectory(spec.X, spec.planes, _angles(spec, point), spec.S[:0], rows, cols)
    return endpoint


def _left_derivatives(spec: InducedMapSpec, point: NDArray[np.float64]) -> tuple[Matrix, NDArray[np.float64]]:
    rows, cols = plane_axes_table(spec.n)
    endpoint, states = _trajectory(spec.X, spec.planes, _angles(spec, point), spec.S, rows, cols)
    derivatives = np.stack(
        [
            _conjugated_generator(state, int(plane), rows, cols)
            for state, plane in zip(states, spec.generator_planes)
        ]
    )
    return endpoint, derivatives


def _conjugated_generator(state: Matrix, plane: int, rows: NDArray[np.intp], cols: NDArray[np.intp]) -> Matrix:
    # state^T b state with b = E_kl - E_lk, using only rows k and l of state
    k, l = rows[plane - 1], cols[plane - 1]
    outer = np.outer(state[k], state[l])
    return outer - outer.T


def _trajectory(
    base: Matrix,
    planes: NDArray[np.int64],
    angles: NDArray[np.float64],
    marked: NDArray[np.int64],
    rows: NDArray[np.intp],
    cols: NDArray[np.intp],
) -> tuple[Matrix, NDArray[np.float64]]:
    current = np.array(base, dtype=float, copy=True)
    states = np.empty((marked.size, *current.shape))
    cosines, sines = np.cos(angles), np.sin(angles)
    next_slot = 0
    marked_list = marked.tolist()
    for step, plane in enumerate(planes.tolist()):
        if next_slot < len(marked_list) and marked_list[next_slot] == step:
            states[next_slot] = current
            next_slot += 1
        rotate_rows(current, rows[plane - 1], cols[plane - 1], cosines[step], sines[step])
    return current, states


def _product(
    rows: NDArray[np.intp],
    cols: NDArray[np.intp],
    planes: NDArray[np.int64],
    angles: NDArray[np.float64],
    start: int,
    stop: int,
    n: int,
) -> Matrix:
    block = np.eye(n)
    for step in range(start, stop):
        plane = int(planes[step])
        rotate_rows(block, rows[plane - 1], cols[plane - 1], math.cos(angles[step]), math.sin(angles[step]))
    return block


def _angles(spec: InducedMapSpec, point: NDArray[np.float64]) -> NDArray[np.float64]:
    angles = spec.eta.copy()
    angles[spec.S] += point
    return angles


def _as_point(spec: InducedMapSpec, x: ArrayLike) -> NDArray[np.float64]:
    point = np.asarray(x, dtype=float).reshape(-1)
    if point.size != spec.dimension:
        raise DomainError(f"Perturbation must have {spec.dimension} coordinates, got {point.size}")
    if not np.all(np.isfinite(point)):
        raise DomainError("Perturbation has non-finite coordinates")
    return point


def _checked_point(spec: InducedMapSpec, x: ArrayLike) -> NDArray[np.float64]:
    point = _as_point(spec, x)
    if np.max(np.abs(point)) > spec.c * (1.0 + 1e-12):
        raise DomainError(f"Perturbation {np.max(np.abs(point)):.6g} outside the box of half-width {spec.c}")
    return point
