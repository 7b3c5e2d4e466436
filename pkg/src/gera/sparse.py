"""Sparse CSR matrices and direct factorizations of shifted operators.

The factorization of ``A - s I`` is computed in-repo (no external sparse
solver): Gilbert-Peierls left-looking LU with partial pivoting for sparse
targets, a plain dense LU when the matrix is dense enough that sparse
bookkeeping only adds overhead.  Factorizations are cached on the matrix
object, keyed by the exact shift value, so repeated solves with a repeated
shift pay for one factorization.
"""

import threading

import numpy as np

from . import _kernels

__all__ = [
    "CSRMatrix",
    "ShiftedFactorization",
    "SingularShiftError",
    "factor_shifted",
    "solve_shifted",
]

# above this density a dense LU is cheaper than sparse index chasing
_DENSE_DENSITY = 0.2
_DENSE_MAX_N = 4096


class SingularShiftError(RuntimeError):
    """Raised when A - s I has no usable pivot (s is an eigenvalue of A)."""

    def __init__(self, shift, column):
        self.shift = shift
        self.column = column
        super().__init__(
            f"factorization of (A - {shift!r} I) broke down at column "
            f"{column}: shift appears to be an eigenvalue of A")


class CSRMatrix:
    """Square sparse matrix in compressed sparse row form."""

    def __init__(self, n, indptr, indices, data, _validate=True):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if _validate:
            self._validate()
        self._fcache = {}
        self._fcache_lock = threading.Lock()

    def _validate(self):
        n = self.n
        if self.indptr.shape != (n + 1,):
            raise ValueError("indptr must have length n+1")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("indptr endpoints inconsistent with indices")
        if len(self.indices) != len(self.data):
            raise ValueError("indices and data length mismatch")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be nondecreasing")
        if len(self.indices):
            if self.indices.min() < 0 or self.indices.max() >= n:
                raise ValueError("column index out of range")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("matrix values must be finite")
        for i in range(n):
            row = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if row.size > 1 and np.any(np.diff(row) <= 0):
                raise ValueError(f"row {i}: indices not sorted/unique")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coo(cls, n, rows, cols, vals, sum_duplicates=True):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (len(rows) == len(cols) == len(vals)):
            raise ValueError("rows/cols/vals length mismatch")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            first = np.empty(len(rows), dtype=bool)
            first[0] = True
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            if not first.all():
                if not sum_duplicates:
                    raise ValueError("duplicate entries")
                group = np.cumsum(first) - 1
                vals = np.bincount(group, weights=vals,
                                   minlength=first.sum())
                rows, cols = rows[first], cols[first]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n, indptr, cols, vals)

    @classmethod
    def from_dense(cls, M):
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("dense input must be square")
        rows, cols = np.nonzero(M)
        return cls.from_coo(M.shape[0], rows, cols, M[rows, cols])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    # -- basics -------------------------------------------------------------

    @property
    def nnz(self):
        return len(self.data)

    @property
    def density(self):
        return self.nnz / max(self.n * self.n, 1)

    @property
    def shape(self):
        return (self.n, self.n)

    def matvec(self, B):
        """A @ B for a block (n, p) or vector (n,)."""
        B = np.asarray(B, dtype=np.float64)
        vec = B.ndim == 1
        if vec:
            B = B[:, None]
        if B.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {B.shape[0]}")
        out = _kernels.csr_block_matvec(
            self.indptr, self.indices, self.data,
            np.ascontiguousarray(B))
        return out[:, 0] if vec else out

    __matmul__ = matvec

    def to_dense(self):
        M = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        M[rows, self.indices] = self.data
        return M

    def transpose(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return CSRMatrix.from_coo(self.n, self.indices, rows, self.data)

    def diagonal(self):
        d = np.zeros(self.n)
        for i in range(self.n):
            row = slice(self.indptr[i], self.indptr[i + 1])
            hit = np.searchsorted(self.indices[row], i)
            lo = self.indptr[i] + hit
            if lo < self.indptr[i + 1] and self.indices[lo] == i:
                d[i] = self.data[lo]
        return d

    def frob_norm(self):
        return float(np.linalg.norm(self.data))

    def is_symmetric(self, tol=1e-12):
        T = self.transpose()
        if not np.array_equal(T.indptr, self.indptr) or \
                not np.array_equal(T.indices, self.indices):
            return False
        scale = max(1.0, float(np.abs(self.data).max(initial=0.0)))
        return float(np.abs(T.data - self.data).max(initial=0.0)) <= tol * scale

    def _shifted_csc(self, s):
        """CSC arrays of A - s I, diagonal entries forced into the pattern."""
        n = self.n
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
        rows = np.concatenate([rows, np.arange(n, dtype=np.int64)])
        cols = np.concatenate([self.indices, np.arange(n, dtype=np.int64)])
        vals = np.concatenate([self.data, np.full(n, -float(s))])
        order = np.lexsort((rows, cols))
        rows, cols, vals = rows[order], cols[order], vals[order]
        first = np.empty(len(rows), dtype=bool)
        first[0] = True
        first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        group = np.cumsum(first) - 1
        vals = np.bincount(group, weights=vals, minlength=int(first.sum()))
        rows, cols = rows[first], cols[first]
        Ap = np.zeros(n + 1, dtype=np.int64)
        np.add.at(Ap, cols + 1, 1)
        np.cumsum(Ap, out=Ap)
        return Ap, rows, vals


class ShiftedFactorization:
    """LU factorization of A - s I ready for repeated block solves."""

    def __init__(self, A, s):
        if isinstance(s, complex) or np.iscomplexobj(s):
            raise ValueError(
                f"complex shift {s!r} not supported: all shifts are real")
        self.shift = float(s)
        self.n = A.n
        if A.density >= _DENSE_DENSITY and A.n <= _DENSE_MAX_N:
            M = A.to_dense()
            M[np.diag_indices_from(M)] -= self.shift
            status, LU, perm = _kernels.dense_lu_factor(
                np.ascontiguousarray(M))
            if status != 0:
                raise SingularShiftError(self.shift, status - 1)
            self._dense = (LU, perm)
            self._sparse = None
        else:
            Ap, Ai, Ax = A._shifted_csc(self.shift)
            status, Lp, Li, Lx, Up, Ui, Ux, perm, pinv = \
                _kernels.lu_factor_csc(self.n, Ap, Ai, Ax)
            if status != 0:
                raise SingularShiftError(self.shift, status - 1)
            # map L's original row indices to pivot-position space
            Li = pinv[Li]
            self._dense = None
            self._sparse = (Lp, Li, Lx, Up, Ui, Ux, perm)

    def solve(self, B):
        """X with (A - s I) X = B; accepts a block (n, p) or vector (n,)."""
        B = np.asarray(B, dtype=np.float64)
        vec = B.ndim == 1
        if vec:
            B = B[:, None]
        if B.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {B.shape[0]}")
        B = np.ascontiguousarray(B)
        if self._dense is not None:
            LU, perm = self._dense
            X = _kernels.dense_lu_solve(LU, perm, B)
        else:
            X = _kernels.lu_solve_csc(*self._sparse, B)
        return X[:, 0] if vec else X


def factor_shifted(A, s):
    """Factorization of A - s I, cached on A by exact shift value."""
    if isinstance(s, complex) or np.iscomplexobj(s):
        raise ValueError(
            f"complex shift {s!r} not supported: all shifts are real")
    s = float(s)
    with A._fcache_lock:
        fact = A._fcache.get(s)
    if fact is not None:
        return fact
    fact = ShiftedFactorization(A, s)
    with A._fcache_lock:
        return A._fcache.setdefault(s, fact)


def solve_shifted(fact, B):
    """Solve (A - s I) X = B using a previously computed factorization."""
    return fact.solve(B)
