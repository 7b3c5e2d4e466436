"""Matrix-function actions f(A)V and shifted linear systems via the global
extended-rational Arnoldi process.

The library treats tall n-by-p blocks as the vectors of a global Krylov
space under the Frobenius inner product, builds an F-orthonormal basis that
mixes power blocks A^k V with nested shifted-inverse blocks, and projects
matrix functions, resolvents, and the matrix exponential onto that space.
"""

from ._kernels import NUMBA_ENABLED, backend
from .blocks import basis_combine, diamond_product, frob_norm, frobenius_inner
from .sparse import (CSRMatrix, ShiftedFactorization, SingularShiftError,
                     factor_shifted, solve_shifted)

__all__ = [
    "NUMBA_ENABLED",
    "backend",
    "frobenius_inner",
    "frob_norm",
    "diamond_product",
    "basis_combine",
    "CSRMatrix",
    "ShiftedFactorization",
    "SingularShiftError",
    "factor_shifted",
    "solve_shifted",
]

__version__ = "0.1.0"
