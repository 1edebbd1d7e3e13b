"""SO(n) and so(n) primitives."""

from .so_n import (
    Matrix,
    SkewMatrix,
    SpecialOrthogonalMatrix,
    angle_distance,
    apply_rotation_left,
    axes_to_plane,
    basis_element,
    from_skew_coordinates,
    haar_marginal_cdf,
    haar_marginal_density,
    haar_sample,
    hs_inner,
    hs_norm,
    mat_exp_skew,
    orthogonality_error,
    plane_axes_table,
    plane_count,
    plane_to_axes,
    project_skew,
    reorthonormalize,
    rotate_rows,
    rotation_matrix,
    skew_coordinates,
    sphere_coordinate_cdf,
    wrap_angle,
)

__all__ = [
    "Matrix",
    "SkewMatrix",
    "SpecialOrthogonalMatrix",
    "angle_distance",
    "apply_rotation_left",
    "axes_to_plane",
    "basis_element",
    "from_skew_coordinates",
    "haar_marginal_cdf",
    "haar_marginal_density",
    "haar_sample",
    "hs_inner",
    "hs_norm",
    "mat_exp_skew",
    "orthogonality_error",
    "plane_axes_table",
    "plane_count",
    "plane_to_axes",
    "project_skew",
    "reorthonormalize",
    "rotate_rows",
    "rotation_matrix",
    "skew_coordinates",
    "sphere_coordinate_cdf",
    "wrap_angle",
]
