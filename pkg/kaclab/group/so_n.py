"""Primitives for SO(n) and its Lie algebra of skew-symmetric matrices."""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, special, stats

from ..config import DEFAULT_CONFIG, LabConfig
from ..errors import DomainError, NumericError

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
# Skew-symmetric n×n matrices (elements of so(n)).
SkewMatrix = Matrix
# Rotation matrices with unit determinant.
SpecialOrthogonalMatrix = Matrix

SQRT2 = math.sqrt(2.0)


def plane_count(n: int) -> int:
    """Number N = n(n-1)/2 of coordinate planes in dimension *n*."""

    if n < 2:
        raise DomainError(f"Dimension must be at least 2, got {n}")
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def plane_axes_table(n: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """Zero-based axis arrays (k, l) for every plane, in lexicographic order."""

    rows, cols = np.triu_indices(n, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def plane_to_axes(n: int, i: int) -> tuple[int, int]:
    N = plane_count(n)
    if not 1 <= i <= N:
        raise DomainError(f"Plane index {i} outside 1..{N} for n={n}")
    rows, cols = plane_axes_table(n)
    return int(rows[i - 1]) + 1, int(cols[i - 1]) + 1


def axes_to_plane(n: int, k: int, l: int) -> int:
    if not 1 <= k < l <= n:
        raise DomainError(f"Axis pair ({k}, {l}) is not an ordered pair in 1..{n}")
    return (k - 1) * (2 * n - k) // 2 + (l - k)


def rotation_matrix(n: int, i: int, theta: float) -> SpecialOrthogonalMatrix:
    k, l = plane_to_axes(n, i)
    c, s = math.cos(theta), math.sin(theta)
    rotation = np.eye(n)
    rotation[k - 1, k - 1] = c
    rotation[l - 1, l - 1] = c
    rotation[k - 1, l - 1] = s
    rotation[l - 1, k - 1] = -s
    return rotation


def rotate_rows(X: Matrix, k: int, l: int, c: float, s: float) -> None:
    """Left-multiply *X* in place by a plane rotation on zero-based rows k and l."""

    row_k = X[k].copy()
    X[k] = c * row_k + s * X[l]
    X[l] = c * X[l] - s * row_k


def apply_rotation_left(X: SpecialOrthogonalMatrix, i: int, theta: float) -> SpecialOrthogonalMatrix:
    n = _square_dimension(X)
    k, l = plane_to_axes(n, i)
    rotated = np.array(X, dtype=float, copy=True)
    rotate_rows(rotated, k - 1, l - 1, math.cos(theta), math.sin(theta))
    return rotated


def basis_element(n: int, i: int) -> SkewMatrix:
    """Unit Hilbert-Schmidt basis element a_i = (E_kl - E_lk)/sqrt(2)."""

    k, l = plane_to_axes(n, i)
    element = np.zeros((n, n))
    element[k - 1, l - 1] = 1.0 / SQRT2
    element[l - 1, k - 1] = -1.0 / SQRT2
    return element


def hs_inner(A: ArrayLike, B: ArrayLike) -> float:
    left = np.asarray(A, dtype=float)
    right = np.asarray(B, dtype=float)
    if left.shape != right.shape:
        raise DomainError(f"Shape mismatch for inner product: {left.shape} vs {right.shape}")
    return float(np.einsum("ij,ij->", left, right))


def hs_norm(A: ArrayLike) -> float:
    return float(np.linalg.norm(np.asarray(A, dtype=float), ord="fro"))


def project_skew(G: ArrayLike) -> SkewMatrix:
    matrix = np.asarray(G, dtype=float)
    _square_dimension(matrix)
    return 0.5 * (matrix - matrix.T)


def skew_coordinates(G: ArrayLike) -> NDArray[np.float64]:
    """Coordinates <a_i, G> of the skew part of *G* in the basis {a_i}."""

    matrix = np.asarray(G, dtype=float)
    rows, cols = plane_axes_table(_square_dimension(matrix))
    return (matrix[rows, cols] - matrix[cols, rows]) / SQRT2


def from_skew_coordinates(coordinates: ArrayLike, n: int) -> SkewMatrix:
    values = np.asarray(coordinates, dtype=float)
    if values.shape != (plane_count(n),):
        raise DomainError(f"Expected {plane_count(n)} coordinates for n={n}, got shape {values.shape}")
    rows, cols = plane_axes_table(n)
    skew = np.zeros((n, n))
    skew[rows, cols] = values / SQRT2
    skew[cols, rows] = -values / SQRT2
    return skew


def mat_exp_skew(A: ArrayLike) -> SpecialOrthogonalMatrix:
    matrix = np.asarray(A, dtype=float)
    _square_dimension(matrix)
    if not np.all(np.isfinite(matrix)):
        raise NumericError("Matrix exponential input has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(matrix))))
    if np.max(np.abs(matrix + matrix.T)) > 1e-12 * scale:
        raise DomainError("Matrix exponential input is not skew-symmetric")
    result = linalg.expm(matrix)
    if not np.all(np.isfinite(result)):
        raise NumericError("Matrix exponential produced non-finite entries")
    return result


def haar_sample(n: int, rng: np.random.Generator) -> SpecialOrthogonalMatrix:
    """Draw from Haar measure on SO(n) by sign-corrected QR of a Gaussian matrix."""

    if n < 2:
        raise DomainError(f"Dimension must be at least 2, got {n}")
    while True:
        gaussian = rng.standard_normal((n, n))
        q, r = np.linalg.qr(gaussian)
        diagonal = np.diagonal(r)
        if np.all(diagonal != 0.0):
            break
        logger.debug("Resampling degenerate Gaussian draw for Haar sample (n=%d)", n)
    q = q * np.sign(diagonal)
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def haar_marginal_density(n: int, x: ArrayLike) -> NDArray[np.float64] | float:
    """Density c_n (1 - x^2)^((n-3)/2) of a single entry of a Haar matrix."""

    if n < 3:
        raise DomainError(f"Entry density requires n >= 3, got {n}")
    values = _unit_interval(x)
    log_norm = special.gammaln(n / 2) - 0.5 * math.log(math.pi) - special.gammaln((n - 1) / 2)
    density = math.exp(log_norm) * np.power(1.0 - values**2, (n - 3) / 2)
    return float(density) if density.ndim == 0 else density


def sphere_coordinate_cdf(dim: int, x: ArrayLike) -> NDArray[np.float64] | float:
    """CDF of one coordinate of a uniform point on the unit sphere in R^dim."""

    if dim < 2:
        raise DomainError(f"Sphere dimension must be at least 2, got {dim}")
    values = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    shape = (dim - 1) / 2
    cdf = stats.beta.cdf((values + 1.0) / 2.0, shape, shape)
    return float(cdf) if np.ndim(cdf) == 0 else cdf


def haar_marginal_cdf(n: int, x: ArrayLike) -> NDArray[np.float64] | float:
    return sphere_coordinate_cdf(n, x)


def orthogonality_error(X: ArrayLike) -> float:
    matrix = np.asarray(X, dtype=float)
    n = _square_dimension(matrix)
    return float(np.linalg.norm(matrix.T @ matrix - np.eye(n), ord="fro"))


def reorthonormalize(X: ArrayLike, config: LabConfig = DEFAULT_CONFIG) -> SpecialOrthogonalMatrix:
    """Nearest rotation to a near-orthogonal matrix via the polar decomposition.

    Raises NumericError when the input is too far from O(n) or when its
    orthogonal polar factor is a reflection.
    """

    matrix = np.asarray(X, dtype=float)
    error = orthogonality_error(matrix)
    if not math.isfinite(error) or error >= config.reorthonormalize_limit:
        raise NumericError(f"Matrix too far from orthogonal to correct: ||X^T X - I||_F = {error:.3e}")
    unitary, _ = linalg.polar(matrix)
    if np.linalg.det(unitary) < 0:
        raise NumericError("Polar factor has determinant -1; refusing to map a reflection into SO(n)")
    return unitary


def wrap_angle(theta: ArrayLike) -> NDArray[np.float64] | float:
    """Reduce angles into [0, 2*pi)."""

    wrapped = np.mod(np.asarray(theta, dtype=float), 2 * math.pi)
    wrapped = np.where(wrapped >= 2 * math.pi, 0.0, wrapped)
    return float(wrapped) if wrapped.ndim == 0 else wrapped


def angle_distance(alpha: ArrayLike, beta: ArrayLike) -> NDArray[np.float64] | float:
    """Geodesic distance between angles on the circle."""

    gap = np.abs(np.asarray(wrap_angle(np.asarray(alpha) - np.asarray(beta))))
    distance = np.minimum(gap, 2 * math.pi - gap)
    return float(distance) if distance.ndim == 0 else distance


def _square_dimension(matrix: NDArray[np.float64]) -> int:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix.shape[0]


def _unit_interval(x: ArrayLike) -> NDArray[np.float64]:
    values = np.asarray(x, dtype=float)
    if np.any(np.abs(values) > 1.0):
        raise DomainError("Entry density is supported on [-1, 1]")
    return values
