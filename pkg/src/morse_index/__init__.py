"""Numerical check of the Morse index theorem for geodesics.

Three independent counts are computed for a curvature profile ``S`` along a
geodesic: the conjugate-point total from the Jacobi equation, the Morse
index of a Galerkin discretisation of the index form, and the sum of
crossing-form signatures along the scaling path ``lam -> q_lam``.
"""

from .errors import MorseIndexError
from .geometry import CurvatureProfile, ManifoldSpec, Metric2D, builtin_catalog, constant_profile, rescale_profile
from .indexform import GalerkinBasis, IndexReport, assemble, galerkin_index, verify_theorem
from .jacobi import ConjugateReport, JacobiSolution, conjugate_points, solve_jacobi
from .spectral import SymMatrixPath, crossing_sum_identity, find_crossings, morse_index, signature

__version__ = "0.1.0"
