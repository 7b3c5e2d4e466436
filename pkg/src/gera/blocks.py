"""Block-vector operations under the Frobenius inner product.

An n-by-p "block" is a plain 2d float ndarray.  The whole library treats
blocks as the vectors of a global Krylov space: inner products are Frobenius
traces and linear combinations act blockwise, which is the same thing as
multiplying the concatenated basis by ``y (x) I_p`` on the right.
"""

import numpy as np

__all__ = [
    "as_block",
    "frobenius_inner",
    "frob_norm",
    "diamond_product",
    "basis_combine",
]


def as_block(X):
    """Validate and return X as a 2d float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"block must be 2d, got shape {X.shape}")
    return X


def frobenius_inner(X, Y):
    """Frobenius inner product trace(Y^T X) of two equally shaped blocks."""
    X = as_block(X)
    Y = as_block(Y)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return float(np.dot(X.ravel(), Y.ravel()))


def frob_norm(X):
    return float(np.linalg.norm(np.asarray(X)))


def _stack(blocks, name):
    if isinstance(blocks, np.ndarray) and blocks.ndim == 3:
        arr = np.asarray(blocks, dtype=np.float64)
    else:
        blocks = list(blocks)
        if not blocks:
            raise ValueError(f"{name}: empty block list")
        arr = np.stack([as_block(b) for b in blocks])
    if arr.shape[0] == 0:
        raise ValueError(f"{name}: empty block list")
    return arr


def diamond_product(M, N):
    """Matrix of pairwise Frobenius inner products.

    M and N are sequences (or stacked 3d arrays) of s and l blocks of one
    common shape; entry (i, j) of the result is <N_j, M_i>_F.
    """
    Ma = _stack(M, "diamond_product")
    Na = _stack(N, "diamond_product")
    if Ma.shape[1:] != Na.shape[1:]:
        raise ValueError(
            f"block shape mismatch: {Ma.shape[1:]} vs {Na.shape[1:]}")
    return Ma.reshape(Ma.shape[0], -1) @ Na.reshape(Na.shape[0], -1).T


def basis_combine(blocks, y):
    """Linear combination sum_i y_i * blocks_i.

    Realizes V (y (x) I_p) for the block row V = [V_1, ..., V_k].
    """
    arr = _stack(blocks, "basis_combine")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != arr.shape[0]:
        raise ValueError(
            f"length mismatch: {arr.shape[0]} blocks vs {y.shape[0]} weights")
    flat = y @ arr.reshape(arr.shape[0], -1)
    return flat.reshape(arr.shape[1], arr.shape[2])
