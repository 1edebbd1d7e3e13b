"""Induced maps, their derivatives and the Jacobian matrices D and D_inf."""

from .induced_map import (
    BlockFactorization,
    InducedMapSpec,
    block_factorize,
    derivative_map,
    gram_matrix,
    gram_volume,
    induced_map_eval,
    left_derivatives,
    log_gram_volume,
    numerical_rank,
)
from .matrices import JacobianMatrix, adjoint_entry_cdf, d_infinity, d_matrix

__all__ = [
    "BlockFactorization",
    "InducedMapSpec",
    "JacobianMatrix",
    "adjoint_entry_cdf",
    "block_factorize",
    "d_infinity",
    "d_matrix",
    "derivative_map",
    "gram_matrix",
    "gram_volume",
    "induced_map_eval",
    "left_derivatives",
    "log_gram_volume",
    "numerical_rank",
]
