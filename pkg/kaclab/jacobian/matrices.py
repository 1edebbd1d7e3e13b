"""Jacobian matrix D of the induced map and its Haar idealisation D_inf."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import DomainError
from ..group.so_n import basis_element, haar_sample, plane_count
from .induced_map import InducedMapSpec, block_factorize


@dataclass(slots=True)
class JacobianMatrix:
    D: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.D = np.asarray(self.D, dtype=float)
        if self.D.ndim != 2 or self.D.shape[0] != self.D.shape[1]:
            raise DomainError(f"Jacobian matrix must be square, got shape {self.D.shape}")
        if not np.array_equal(self.D, self.D.T):
            raise DomainError("Jacobian matrix must be exactly symmetric")
        if not np.all(np.diagonal(self.D) == 1.0):
            raise DomainError("Jacobian matrix must have unit diagonal")

    @property
    def N(self) -> int:
        return self.D.shape[0]


def d_matrix(spec: InducedMapSpec) -> JacobianMatrix:
    """D[i, j] = -Tr[a_i M R_j^{-1} a_j R_j M^{-1}] evaluated at x = 0.

    M^{-1} = E_{j-1} R_{j-1} ··· E_{i+1} R_{i+1} is the stretch of walk between
    marked rotations i and j that precedes R_j. With C = R_j M^{-1} the entry
    is <a_i, C^T a_j C>, half the Gram entry of the derivative map.
    """

    blocks = block_factorize(spec)
    generators = [basis_element(spec.n, int(plane)) for plane in blocks.planes]
    size = len(generators)
    D = np.eye(size)
    for i in range(size):
        segment = np.eye(spec.n)
        for j in range(i + 1, size):
            if j > i + 1:
                segment = blocks.marked_rotation(j - 1) @ blocks.unmarked[j - 1] @ segment
            M = segment.T
            R_j = blocks.unmarked[j]
            value = -np.trace(generators[i] @ M @ R_j.T @ generators[j] @ R_j @ M.T)
            D[i, j] = D[j, i] = value
    return JacobianMatrix(D)


def d_infinity(n: int, rng: np.random.Generator) -> JacobianMatrix:
    """D_inf[i, j] = -Tr[a_i P a_j P^{-1}] with P = P_{i+1} ··· P_j, P_l i.i.d. Haar."""

    N = plane_count(n)
    generators = [basis_element(n, i) for i in range(1, N + 1)]
    haar = [haar_sample(n, rng) for _ in range(N - 1)]
    D = np.eye(N)
    for i in range(N):
        P = np.eye(n)
        for j in range(i + 1, N):
            P = P @ haar[j - 1]
            value = -np.trace(generators[i] @ P @ generators[j] @ P.T)
            D[i, j] = D[j, i] = value
    return JacobianMatrix(D)


def adjoint_entry_cdf(n: int, x: ArrayLike) -> NDArray[np.float64]:
    """Exact CDF of an off-diagonal entry of D_inf for n = 3 and n = 4.

    At n = 3 the conjugation orbit of a_j is the unit sphere of so(3), so an
    entry is uniform on [-1, 1]. At n = 4 an entry is a sum of two independent
    uniforms on [-1/2, 1/2] (self-dual and anti-self-dual parts), hence
    triangular with density 1 - |x|.
    """

    values = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    if n == 3:
        return (values + 1.0) / 2.0
    if n == 4:
        return np.where(values <= 0.0, 0.5 * (1.0 + values) ** 2, 1.0 - 0.5 * (1.0 - values) ** 2)
    raise DomainError(f"No closed-form entry law for n={n}; compare against sphere_coordinate_cdf instead")
