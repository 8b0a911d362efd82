"""Spectra of Laplacian-preconditioned diagonal diffusion operators on boxes."""

__version__ = "0.1.0"

from .assembly import QuadratureRule, assemble_laplacian, assemble_stiffness, interpolate
from .coefficients import AxisAffine, Constant, HullEstimate, PiecewiseConstant, SmoothRadial, estimate_hull
from .eig import EigenResult, dense_generalized_eig, lobpcg, rayleigh_quotient
from .linalg import SparseMatrix, cg_solve, cholesky_dense, l_inner, l_norm, spmv
from .mesh import BoxDomain, StructuredGrid, build_grid, node_coords

__all__ = [
    "AxisAffine", "BoxDomain", "Constant", "EigenResult", "HullEstimate", "PiecewiseConstant",
    "QuadratureRule", "SmoothRadial", "SparseMatrix", "StructuredGrid", "assemble_laplacian",
    "assemble_stiffness", "build_grid", "cg_solve", "cholesky_dense", "dense_generalized_eig",
    "estimate_hull", "interpolate", "l_inner", "l_norm", "lobpcg", "node_coords", "rayleigh_quotient", "spmv",
]
