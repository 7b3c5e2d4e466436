"""Low-level numerical kernels.

Every kernel exists in two variants: a numba ``@njit`` version and a pure
numpy/Python reference version.  The active variant is chosen once at import
time: set ``GERA_PURE_NUMPY=1`` in the environment (or run without numba
installed) to get the reference path.  ``benchmarks/kernel_bench.py`` compares
the two.

Sparse factorizations use the left-looking column algorithm (Gilbert-Peierls)
with partial pivoting.  L is stored per column with the unit diagonal first;
U is stored per column with the diagonal entry last.  Row indices of both
factors are in pivot-position space, so the triangular solves need no
indirection beyond the row permutation ``perm``.
"""

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "backend",
    "csr_block_matvec",
    "lu_factor_csc",
    "lu_solve_csc",
    "dense_lu_factor",
    "dense_lu_solve",
]

_PURE = os.environ.get("GERA_PURE_NUMPY", "0").lower() in ("1", "true", "yes")
if not _PURE:
    try:
        from numba import njit
        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# CSR block matvec: out = A @ B for B with shape (n, p)
# ---------------------------------------------------------------------------

def _csr_block_matvec_impl(indptr, indices, data, B, out):
    n = indptr.shape[0] - 1
    p = B.shape[1]
    for i in range(n):
        for q in range(indptr[i], indptr[i + 1]):
            j = indices[q]
            v = data[q]
            for c in range(p):
                out[i, c] += v * B[j, c]
    return out


def csr_block_matvec_numpy(indptr, indices, data, B):
    n = indptr.shape[0] - 1
    out = np.zeros((n, B.shape[1]), dtype=np.float64)
    if len(data) == 0:
        return out
    contrib = data[:, None] * B[indices, :]
    nonempty = np.flatnonzero(np.diff(indptr) > 0)
    starts = indptr[nonempty].astype(np.intp)
    # reduceat segments run to the next listed start; skipped (empty) rows
    # contribute no entries, so each segment is exactly one row.
    out[nonempty] = np.add.reduceat(contrib, starts, axis=0)
    return out


# ---------------------------------------------------------------------------
# Sparse LU (Gilbert-Peierls, partial pivoting) of a CSC matrix
# ---------------------------------------------------------------------------
# Returns (status, Lp, Li, Lx, Up, Ui, Ux, perm, pinv).  status == 0 on
# success, k+1 if no usable pivot exists in column k.  During factorization L
# row indices are original; the wrapper in sparse.py maps them to position
# space before handing the factors to lu_solve_csc.

def _lu_factor_csc_impl(n, Ap, Ai, Ax):
    cap = max(4 * Ai.shape[0] + n, 16 * n)
    Lp = np.zeros(n + 1, np.int64)
    Up = np.zeros(n + 1, np.int64)
    Li = np.empty(cap, np.int64)
    Lx = np.empty(cap, np.float64)
    Ui = np.empty(cap, np.int64)
    Ux = np.empty(cap, np.float64)
    pinv = np.full(n, -1, np.int64)
    perm = np.full(n, -1, np.int64)
    x = np.zeros(n, np.float64)
    xi = np.empty(n, np.int64)
    rstack = np.empty(n, np.int64)
    pstack = np.empty(n, np.int64)
    marked = np.zeros(n, np.uint8)

    lnz = 0
    unz = 0
    for k in range(n):
        # symbolic: reach of A(:,k) in the graph of L, topological order
        top = n
        for q in range(Ap[k], Ap[k + 1]):
            if marked[Ai[q]]:
                continue
            head = 0
            rstack[0] = Ai[q]
            while head >= 0:
                j = rstack[head]
                jcol = pinv[j]
                if not marked[j]:
                    marked[j] = 1
                    pstack[head] = Lp[jcol] + 1 if jcol >= 0 else 0
                done = True
                if jcol >= 0:
                    q2 = pstack[head]
                    while q2 < Lp[jcol + 1]:
                        irow = Li[q2]
                        if not marked[irow]:
                            pstack[head] = q2 + 1
                            head += 1
                            rstack[head] = irow
                            done = False
                            break
                        q2 += 1
                    if done:
                        pstack[head] = q2
                if done:
                    top -= 1
                    xi[top] = j
                    head -= 1
        # numeric: x = L \ A(:,k), processed in topological order
        for q in range(top, n):
            x[xi[q]] = 0.0
        for q in range(Ap[k], Ap[k + 1]):
            x[Ai[q]] = Ax[q]
        for q in range(top, n):
            j = xi[q]
            jcol = pinv[j]
            if jcol < 0:
                continue
            xj = x[j]
            if xj != 0.0:
                for r in range(Lp[jcol] + 1, Lp[jcol + 1]):
                    x[Li[r]] -= Lx[r] * xj
        # partial pivot among not-yet-pivoted rows of the pattern
        ipiv = -1
        amax = -1.0
        for q in range(top, n):
            i = xi[q]
            if pinv[i] < 0:
                ax = abs(x[i])
                if ax > amax:
                    amax = ax
                    ipiv = i
        if ipiv < 0 or amax == 0.0:
            return (k + 1, Lp, Li[:lnz], Lx[:lnz], Up, Ui[:unz], Ux[:unz],
                    perm, pinv)
        pivot = x[ipiv]
        # grow storage if needed
        need = max(lnz, unz) + (n - top) + 1
        if need > Li.shape[0]:
            newcap = Li.shape[0]
            while newcap < need:
                newcap *= 2
            Li2 = np.empty(newcap, np.int64)
            Lx2 = np.empty(newcap, np.float64)
            Li2[:lnz] = Li[:lnz]
            Lx2[:lnz] = Lx[:lnz]
            Li, Lx = Li2, Lx2
            Ui2 = np.empty(newcap, np.int64)
            Ux2 = np.empty(newcap, np.float64)
            Ui2[:unz] = Ui[:unz]
            Ux2[:unz] = Ux[:unz]
            Ui, Ux = Ui2, Ux2
        # U column k: entries at already-pivoted rows, diagonal last
        for q in range(top, n):
            i = xi[q]
            marked[i] = 0
            if pinv[i] >= 0:
                Ui[unz] = pinv[i]
                Ux[unz] = x[i]
                unz += 1
        Ui[unz] = k
        Ux[unz] = pivot
        unz += 1
        Up[k + 1] = unz
        # L column k: unit diagonal first, then scaled subdiagonal
        pinv[ipiv] = k
        perm[k] = ipiv
        Li[lnz] = ipiv
        Lx[lnz] = 1.0
        lnz += 1
        for q in range(top, n):
            i = xi[q]
            if pinv[i] < 0:
                Li[lnz] = i
                Lx[lnz] = x[i] / pivot
                lnz += 1
        Lp[k + 1] = lnz
    return (0, Lp, Li[:lnz], Lx[:lnz], Up, Ui[:unz], Ux[:unz], perm, pinv)


def _lu_solve_csc_impl(Lp, Li, Lx, Up, Ui, Ux, perm, B, X):
    n = Lp.shape[0] - 1
    p = B.shape[1]
    for k in range(n):
        src = perm[k]
        for c in range(p):
            X[k, c] = B[src, c]
    for k in range(n):
        for q in range(Lp[k] + 1, Lp[k + 1]):
            r = Li[q]
            v = Lx[q]
            for c in range(p):
                X[r, c] -= v * X[k, c]
    for k in range(n - 1, -1, -1):
        dq = Up[k + 1] - 1
        d = Ux[dq]
        for c in range(p):
            X[k, c] /= d
        for q in range(Up[k], dq):
            r = Ui[q]
            v = Ux[q]
            for c in range(p):
                X[r, c] -= v * X[k, c]
    return X


def lu_factor_csc_numpy(n, Ap, Ai, Ax):
    """Reference Gilbert-Peierls factorization (interpreted; small n only)."""
    return _lu_factor_csc_impl(n, Ap, Ai, Ax)


def lu_solve_csc_numpy(Lp, Li, Lx, Up, Ui, Ux, perm, B):
    n = Lp.shape[0] - 1
    X = B[perm, :].astype(np.float64)
    for k in range(n):
        lo, hi = Lp[k] + 1, Lp[k + 1]
        if hi > lo:
            X[Li[lo:hi]] -= Lx[lo:hi, None] * X[k]
    for k in range(n - 1, -1, -1):
        dq = Up[k + 1] - 1
        X[k] /= Ux[dq]
        lo = Up[k]
        if dq > lo:
            X[Ui[lo:dq]] -= Ux[lo:dq, None] * X[k]
    return X


# ---------------------------------------------------------------------------
# Dense LU with partial pivoting (used when a factorization target is dense)
# ---------------------------------------------------------------------------

def _dense_lu_factor_impl(M):
    n = M.shape[0]
    perm = np.arange(n, dtype=np.int64)
    for k in range(n):
        ip = k
        amax = abs(M[k, k])
        for i in range(k + 1, n):
            a = abs(M[i, k])
            if a > amax:
                amax = a
                ip = i
        if amax == 0.0:
            return k + 1, M, perm
        if ip != k:
            for j in range(n):
                tmp = M[k, j]
                M[k, j] = M[ip, j]
                M[ip, j] = tmp
            t = perm[k]
            perm[k] = perm[ip]
            perm[ip] = t
        pk = M[k, k]
        for i in range(k + 1, n):
            lik = M[i, k] / pk
            M[i, k] = lik
            for j in range(k + 1, n):
                M[i, j] -= lik * M[k, j]
    return 0, M, perm


def dense_lu_factor_numpy(M):
    n = M.shape[0]
    perm = np.arange(n, dtype=np.int64)
    for k in range(n):
        ip = k + int(np.argmax(np.abs(M[k:, k])))
        if M[ip, k] == 0.0:
            return k + 1, M, perm
        if ip != k:
            M[[k, ip]] = M[[ip, k]]
            perm[[k, ip]] = perm[[ip, k]]
        M[k + 1:, k] /= M[k, k]
        M[k + 1:, k + 1:] -= np.outer(M[k + 1:, k], M[k, k + 1:])
    return 0, M, perm


def _dense_lu_solve_impl(LU, perm, B, X):
    n = LU.shape[0]
    p = B.shape[1]
    for k in range(n):
        src = perm[k]
        for c in range(p):
            X[k, c] = B[src, c]
    for k in range(1, n):
        for j in range(k):
            v = LU[k, j]
            for c in range(p):
                X[k, c] -= v * X[j, c]
    for k in range(n - 1, -1, -1):
        d = LU[k, k]
        for j in range(k + 1, n):
            v = LU[k, j]
            for c in range(p):
                X[k, c] -= v * X[j, c]
        for c in range(p):
            X[k, c] /= d
    return X


def dense_lu_solve_numpy(LU, perm, B):
    n = LU.shape[0]
    X = B[perm, :].astype(np.float64)
    for k in range(1, n):
        X[k] -= LU[k, :k] @ X[:k]
    for k in range(n - 1, -1, -1):
        X[k] -= LU[k, k + 1:] @ X[k + 1:]
        X[k] /= LU[k, k]
    return X


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    _csr_jit = njit(cache=True)(_csr_block_matvec_impl)
    _lu_factor_jit = njit(cache=True)(_lu_factor_csc_impl)
    _lu_solve_jit = njit(cache=True)(_lu_solve_csc_impl)
    _dense_factor_jit = njit(cache=True)(_dense_lu_factor_impl)
    _dense_solve_jit = njit(cache=True)(_dense_lu_solve_impl)

    def csr_block_matvec_numba(indptr, indices, data, B):
        out = np.zeros((indptr.shape[0] - 1, B.shape[1]), dtype=np.float64)
        return _csr_jit(indptr, indices, data, B, out)

    def lu_factor_csc_numba(n, Ap, Ai, Ax):
        return _lu_factor_jit(n, Ap, Ai, Ax)

    def lu_solve_csc_numba(Lp, Li, Lx, Up, Ui, Ux, perm, B):
        X = np.empty((B.shape[0], B.shape[1]), dtype=np.float64)
        return _lu_solve_jit(Lp, Li, Lx, Up, Ui, Ux, perm, B, X)

    def dense_lu_factor_numba(M):
        return _dense_factor_jit(M)

    def dense_lu_solve_numba(LU, perm, B):
        X = np.empty((B.shape[0], B.shape[1]), dtype=np.float64)
        return _dense_solve_jit(LU, perm, B, X)

    csr_block_matvec = csr_block_matvec_numba
    lu_factor_csc = lu_factor_csc_numba
    lu_solve_csc = lu_solve_csc_numba
    dense_lu_factor = dense_lu_factor_numba
    dense_lu_solve = dense_lu_solve_numba
else:
    csr_block_matvec = csr_block_matvec_numpy
    lu_factor_csc = lu_factor_csc_numpy
    lu_solve_csc = lu_solve_csc_numpy
    dense_lu_factor = dense_lu_factor_numpy
    dense_lu_solve = dense_lu_solve_numpy
