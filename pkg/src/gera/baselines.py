"""Comparison methods sharing the projection-approximation interface.

SGA is the standard global Arnoldi (power blocks only); GEA is the extended
process, i.e. the extended-rational one with every shift at zero (same code
path); RA is the global rational Arnoldi with prescribed poles and no power
blocks.  All three produce an F-orthonormal block basis plus a small
projected matrix, so f(A)V is approximated the same way as with the
extended-rational space.
"""

import numpy as np

from .arnoldi import gera_build, projection_direct
from .blocks import as_block, basis_combine, frob_norm
from .matfun import small_matfun
from .sparse import factor_shifted

__all__ = ["sga_build", "gea_build", "ra_build", "project_fAV"]

_BREAKDOWN_TOL = 1e-12


class _GlobalBasis:
    """Growing F-orthonormal basis with CGS2 orthogonalization."""

    def __init__(self, V):
        V = as_block(V)
        self.n, self.p = V.shape
        self.normV = frob_norm(V)
        if self.normV == 0.0:
            raise ValueError("initial block is zero")
        self._rows = [V.ravel() / self.normV]

    def __len__(self):
        return len(self._rows)

    def orthogonalize(self, W):
        w = np.asarray(W, dtype=np.float64).ravel().copy()
        pre = np.linalg.norm(w)
        F = np.stack(self._rows)
        c = F @ w
        w -= c @ F
        c2 = F @ w
        w -= c2 @ F
        return w, c + c2, pre

    def append(self, w, norm):
        self._rows.append(w / norm)

    def block(self, i):
        return self._rows[i].reshape(self.n, self.p)

    def blocks(self):
        return np.stack(self._rows).reshape(len(self._rows), self.n, self.p)


def sga_build(A, V, k, breakdown_tol=_BREAKDOWN_TOL):
    """Standard global Arnoldi: k power steps.

    Returns (blocks, H, breakdown) with blocks of shape (k+1, n, p) and H of
    shape (k+1, k) upper Hessenberg; fewer on lucky breakdown.
    """
    if k < 1:
        raise ValueError("k must be positive")
    basis = _GlobalBasis(V)
    H = np.zeros((k + 1, k))
    breakdown = False
    for j in range(k):
        W = A.matvec(basis.block(j))
        w, c, pre = basis.orthogonalize(W)
        H[:j + 1, j] = c
        hn = np.linalg.norm(w)
        if hn <= breakdown_tol * max(pre, 1.0):
            H = H[:j + 1, :j]
            breakdown = True
            break
        H[j + 1, j] = hn
        basis.append(w, hn)
    return basis.blocks(), H, breakdown


def gea_build(A, V, m, breakdown_tol=_BREAKDOWN_TOL):
    """Global extended Arnoldi: the extended-rational process with all
    shifts at zero (identical code path)."""
    return gera_build(A, V, [0.0] * m, breakdown_tol=breakdown_tol)


def ra_build(A, V, poles, breakdown_tol=_BREAKDOWN_TOL):
    """Global rational Arnoldi with prescribed poles, no power blocks.

    Each step applies (A - s_i I)^{-1} to the newest orthonormal block (the
    strictly nested chain collapses numerically once the space saturates;
    the orthonormalized continuation spans the same space for repeated
    poles and stays stable for distinct ones).  The projected matrix is the
    direct diamond-product compression of A.

    Returns (blocks, T, breakdown).
    """
    poles = [float(s) for s in poles]
    if not poles:
        raise ValueError("at least one pole is required")
    basis = _GlobalBasis(V)
    breakdown = False
    for s in poles:
        fact = factor_shifted(A, s)
        W = fact.solve(basis.block(len(basis) - 1))
        w, _, pre = basis.orthogonalize(W)
        hn = np.linalg.norm(w)
        if hn <= breakdown_tol * max(pre, 1.0):
            breakdown = True
            break
        basis.append(w, hn)
    blocks = basis.blocks()
    T = projection_direct(A, blocks)
    return blocks, T, breakdown


def project_fAV(blocks, T, f, normV):
    """normV * blocks (f(T) e_1 (x) I_p): shared projection approximation."""
    k = T.shape[0]
    y = small_matfun(T, f)[:, 0]
    return normV * basis_combine(blocks[:k], y)
