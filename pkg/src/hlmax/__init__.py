"""Numerical toolkit for averaging and maximal operators over convex
symmetric bodies, on R^d and on the integer lattice.

The package provides body constructors with exact or Monte-Carlo isotropic
normalization, Fourier-side estimators for the averaging symbol, exact
lattice counting and enumeration, grid discretizations of the continuous
operators, randomized lower bounds for operator norms, and a gating suite
that re-derives the quantitative inequalities the design is based on.
"""

from .bodies import (Body, IsotropicBody, ball_isotropic_constant,
                     ball_volume, cube_isotropic_constant, isotropic_position,
                     make_ball, make_cube, make_custom, make_ellipsoid,
                     make_linear_image, make_qball, parse_body_spec,
                     qball_isotropic_constant, qball_volume, sample_uniform,
                     scale_body, unit_ball_radius)
from .gridops import (GridFunction, average, delta_grid, dyadic_scales,
                      grid_function, maximal, poisson, rademacher_menshov,
                      spherical_average)
from .lattice import (LatticeFunction, ball_lattice_count, discrete_average,
                      discrete_maximal, enumerate_points, extend_to_grid,
                      lattice_count)
from .multipliers import (MULTIPLIER_CONSTANT, cube_multiplier_exact,
                          dirichlet_product, discrete_multiplier,
                          dyadic_symbol_sum, multiplier, multiplier_batch,
                          poisson_symbol, section_profile)
from .reports import ExperimentReport, Margin, Measurement, NormEstimate
from .search import estimate_lp_lower_bound, estimate_weak11_lower_bound
from .suite import run_suite

__version__ = "0.1.0"

__all__ = [
    "Body", "IsotropicBody", "ball_isotropic_constant", "ball_volume",
    "cube_isotropic_constant", "isotropic_position", "make_ball", "make_cube",
    "make_custom", "make_ellipsoid", "make_linear_image", "make_qball",
    "parse_body_spec", "qball_isotropic_constant", "qball_volume",
    "sample_uniform", "scale_body", "unit_ball_radius",
    "GridFunction", "average", "delta_grid", "dyadic_scales", "grid_function",
    "maximal", "poisson", "rademacher_menshov", "spherical_average",
    "LatticeFunction", "ball_lattice_count", "discrete_average",
    "discrete_maximal", "enumerate_points", "extend_to_grid", "lattice_count",
    "MULTIPLIER_CONSTANT", "cube_multiplier_exact", "dirichlet_product",
    "discrete_multiplier", "dyadic_symbol_sum", "multiplier",
    "multiplier_batch", "poisson_symbol", "section_profile",
    "ExperimentReport", "Margin", "Measurement", "NormEstimate",
    "estimate_lp_lower_bound", "estimate_weak11_lower_bound", "run_suite",
    "__version__",
]
