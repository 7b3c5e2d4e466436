"""Dense reference evaluation of f(A)V for error reporting.

Full eigendecomposition of the dense operator; intended for n <= 2000 where
the benchmark tables need an "exact" value to compare against.
"""

import numpy as np

from .sparse import CSRMatrix

__all__ = ["dense_fAV", "DENSE_ORACLE_MAX_N"]

DENSE_ORACLE_MAX_N = 2000


def dense_fAV(A, f, V):
    """f(A) V by full eigendecomposition (symmetric or general)."""
    if isinstance(A, CSRMatrix):
        if A.n > DENSE_ORACLE_MAX_N:
            raise ValueError(
                f"dense oracle limited to n <= {DENSE_ORACLE_MAX_N}, "
                f"got n = {A.n}")
        M = A.to_dense()
    else:
        M = np.asarray(A, dtype=np.float64)
        if M.shape[0] > DENSE_ORACLE_MAX_N:
            raise ValueError(
                f"dense oracle limited to n <= {DENSE_ORACLE_MAX_N}")
    V = np.asarray(V, dtype=np.float64)
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() <= 1e-12 * scale:
        w, Q = np.linalg.eigh(M)
        f.check_domain(w)
        return Q @ (f.scalar(w)[:, None] * (Q.T @ V))
    w, S = np.linalg.eig(M)
    f.check_domain(w)
    out = S @ (f.scalar(w)[:, None] * np.linalg.solve(S, V.astype(complex)))
    return out.real
