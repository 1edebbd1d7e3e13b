"""Singular-value experiments and inequality oracles."""

from .drift import d_vs_dinfinity_drift
from .oracles import (
    InequalityReport,
    determinant_ratio_deviation,
    determinant_ratio_oracle,
    exponential_approximation_oracle,
    jacobian_formula_oracle,
    lazy_tail_oracle,
    path_closeness_oracle,
    small_ball_oracle,
    small_ball_sweep,
    sphere_conditional_density_check,
    tangent_closeness_oracle,
    telescoping_oracle,
)
from .singular import QuantileEstimate, phi_estimate, phi_from_samples, sample_sigma_min, singular_values

__all__ = [
    "InequalityReport",
    "QuantileEstimate",
    "d_vs_dinfinity_drift",
    "determinant_ratio_deviation",
    "determinant_ratio_oracle",
    "exponential_approximation_oracle",
    "jacobian_formula_oracle",
    "lazy_tail_oracle",
    "path_closeness_oracle",
    "phi_estimate",
    "phi_from_samples",
    "sample_sigma_min",
    "singular_values",
    "small_ball_oracle",
    "small_ball_sweep",
    "sphere_conditional_density_check",
    "tangent_closeness_oracle",
    "telescoping_oracle",
]
