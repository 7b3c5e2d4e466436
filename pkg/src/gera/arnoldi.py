"""The global extended-rational Arnoldi process.

Starting from a block V, the process alternates power blocks A V_{2j-1} and
shifted-inverse blocks (A - s_j I)^{-1} V_{2j}, F-orthonormalizing each new
block against all previous ones (classical Gram-Schmidt with one full
reorthogonalization pass).  It records the recursion coefficients H, from
which the projection T = V^T <> A V is recovered without further products
with A.

A vanishing normalizer is a lucky breakdown: the span is invariant and
downstream approximations on the truncated basis are exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .blocks import as_block, diamond_product, frob_norm
from .sparse import factor_shifted

__all__ = [
    "BreakdownError",
    "KrylovBasis",
    "ProjectionData",
    "GeraProcess",
    "gera_step",
    "gera_build",
    "recover_T",
    "recover_T_symmetric",
    "projection_direct",
    "arnoldi_residual",
]

BREAKDOWN_TOL = 1e-12


class BreakdownError(RuntimeError):
    """Signals a vanishing normalizer / division guard in the recursion."""


@dataclass
class KrylovBasis:
    """F-orthonormal basis blocks V_1..V_{2m+2} (fewer after a breakdown)."""

    blocks: np.ndarray          # (K, n, p)
    n: int
    p: int
    m: int                      # completed outer steps
    breakdown: bool = False

    def __len__(self):
        return self.blocks.shape[0]

    def matrix(self, k=None):
        """First k blocks as a (k, n, p) array (default: all)."""
        return self.blocks if k is None else self.blocks[:k]

    def save(self, path):
        """Dump the basis to an .npz snapshot (debugging aid)."""
        np.savez(path, blocks=self.blocks, m=self.m,
                 breakdown=self.breakdown)

    @classmethod
    def load(cls, path):
        d = np.load(path)
        blocks = d["blocks"]
        return cls(blocks=blocks, n=blocks.shape[1], p=blocks.shape[2],
                   m=int(d["m"]), breakdown=bool(d["breakdown"]))


@dataclass
class ProjectionData:
    """Recursion coefficients and the recovered projection of A."""

    H: np.ndarray               # (2m+2, 2m) upper block Hessenberg
    T: np.ndarray               # (2m, 2m), or (K, K) after a breakdown
    tau: np.ndarray             # coupling row [t_{2m+1,2m-1}, t_{2m+1,2m}]
    alpha11: float
    alpha12: float
    alpha22: float
    shifts: tuple
    m: int
    _ritz: np.ndarray = field(default=None, repr=False)

    @property
    def ritz(self):
        """Eigenvalues of T (interpolation nodes), sorted by real part."""
        if self._ritz is None:
            lam = np.linalg.eigvals(self.T)
            self._ritz = lam[np.argsort(lam.real)]
        return self._ritz

    @property
    def realized_poles(self):
        """Pole multiset of span{V_1..V_{2m}}.

        The recursion applies s_1 both to the startup block and to the first
        outer step, and s_m only enters V_{2m+2}, so the poles realized by
        the first 2m blocks are (s_1, s_1, s_2, ..., s_{m-1}).
        """
        s = self.shifts
        return (s[0],) + tuple(s[:-1]) if s else ()


class GeraProcess:
    """Incremental driver: one ``step(s)`` appends one block pair."""

    def __init__(self, A, V, breakdown_tol=BREAKDOWN_TOL):
        V = as_block(V)
        if V.shape[0] != A.n:
            raise ValueError(f"block has {V.shape[0]} rows, A is {A.n}x{A.n}")
        self.A = A
        self.n, self.p = V.shape
        self.normV = frob_norm(V)
        if self.normV == 0.0:
            raise ValueError("initial block is zero")
        self.tol = breakdown_tol
        self._buf = np.empty((8, self.n * self.p))
        self._buf[0] = V.ravel() / self.normV
        self.k = 1
        self.m = 0
        self._H = np.zeros((10, 8))
        self.alpha11 = self.normV
        self.alpha12 = 0.0
        self.alpha22 = 0.0
        self.shifts = []
        self.breakdown = False

    # -- internals ----------------------------------------------------------

    def _block(self, i):
        return self._buf[i].reshape(self.n, self.p)

    def _grow(self, k_need, c_need):
        if k_need > self._buf.shape[0]:
            newk = max(2 * self._buf.shape[0], k_need)
            buf = np.empty((newk, self.n * self.p))
            buf[:self.k] = self._buf[:self.k]
            self._buf = buf
        if k_need > self._H.shape[0] or c_need > self._H.shape[1]:
            H = np.zeros((max(2 * self._H.shape[0], k_need + 2),
                          max(2 * self._H.shape[1], c_need + 2)))
            H[:self._H.shape[0], :self._H.shape[1]] = self._H
            self._H = H

    def _orth(self, W):
        """CGS + one reorthogonalization against the current basis."""
        w = np.array(W, dtype=np.float64).ravel()
        pre = np.linalg.norm(w)
        F = self._buf[:self.k]
        c = F @ w
        w = w - c @ F
        c2 = F @ w
        w = w - c2 @ F
        return w, c + c2, pre

    def _append(self, w, norm):
        self._buf[self.k] = w / norm
        self.k += 1

    # -- one outer step -----------------------------------------------------

    def step(self, s):
        """Extend the basis with the pair (A V_{2j-1}, (A-s I)^{-1} V_{2j}).

        Returns True on success, False on lucky breakdown (the basis is
        then truncated and ``breakdown`` is set).
        """
        if self.breakdown:
            raise BreakdownError("process already broke down")
        s = float(s)
        j = self.m + 1
        self._grow(2 * j + 2, 2 * j)
        if j == 1:
            # startup: V_2 from (A - s_1 I)^{-1} V
            fact = factor_shifted(self.A, s)
            W = fact.solve(self._block(0)) * self.alpha11
            w, c, pre = self._orth(W)
            self.alpha12 = float(c[0])
            a22 = np.linalg.norm(w)
            if a22 <= self.tol * max(pre, 1.0):
                self.breakdown = True
                self.shifts.append(s)
                return False
            self.alpha22 = a22
            self._append(w, a22)
        # power block -> V_{2j+1}
        W = self.A.matvec(self._block(2 * j - 2))
        w, c, pre = self._orth(W)
        hn = np.linalg.norm(w)
        self._H[:self.k, 2 * j - 2] = c
        if hn <= self.tol * max(pre, 1.0):
            self.breakdown = True
            if j == 1:
                self.shifts.append(s)
            return False
        self._H[self.k, 2 * j - 2] = hn
        self._append(w, hn)
        # shifted-inverse block -> V_{2j+2}
        fact = factor_shifted(self.A, s)
        W = fact.solve(self._block(2 * j - 1))
        w, c, pre = self._orth(W)
        hn = np.linalg.norm(w)
        self._H[:self.k, 2 * j - 1] = c
        if hn <= self.tol * max(pre, 1.0):
            self.breakdown = True
            self.shifts.append(s)
            return False
        self._H[self.k, 2 * j - 1] = hn
        self._append(w, hn)
        self.m = j
        self.shifts.append(s)
        return True

    # -- results ------------------------------------------------------------

    def partial_T(self):
        """T_{2m} for the steps completed so far (m >= 1)."""
        if self.m < 1:
            raise BreakdownError("no completed step: T not available")
        T, _ = _recover_T_arrays(self._H, self.m, self.alpha11,
                                 self.alpha12, self.alpha22, self.shifts)
        return T

    def _direct_even_column(self, j):
        """Column 2j of the full projection, computed as V^T <> (A V_{2j})."""
        AV = self.A.matvec(self._block(2 * j - 1))
        return self._buf[:self.k] @ AV.ravel()

    def projection(self):
        """(T_{2m}, tau) with a stability guard on the recurrences.

        The coefficient recurrences for the even columns divide by the
        normalizers, which amplifies roundoff once the process approaches
        convergence and the normalizers become small.  The last even column
        is therefore verified against one direct product with A; on mismatch
        every even column is recomputed directly (the odd columns equal the
        recorded coefficients exactly).
        """
        m = self.m
        if m < 1:
            raise BreakdownError("no completed step: T not available")
        T, tau = _recover_T_arrays(self._H, m, self.alpha11, self.alpha12,
                                   self.alpha22, self.shifts)
        col = self._direct_even_column(m)
        ref = np.concatenate([T[:, 2 * m - 1], [tau[1]]])
        scale = max(1.0, float(np.abs(col).max()))
        if np.abs(col[:2 * m + 1] - ref).max() <= 1e-8 * scale:
            return T, tau
        for j in range(1, m + 1):
            cj = self._direct_even_column(j)
            T[:, 2 * j - 1] = cj[:2 * m]
            if j == m:
                tau = np.array([self._H[2 * m, 2 * m - 2], cj[2 * m]])
        return T, tau

    def finalize(self):
        """Freeze the process into (KrylovBasis, ProjectionData)."""
        blocks = self._buf[:self.k].reshape(self.k, self.n, self.p).copy()
        basis = KrylovBasis(blocks=blocks, n=self.n, p=self.p, m=self.m,
                            breakdown=self.breakdown)
        m = self.m
        if self.breakdown or m < 1:
            # invariant subspace: project directly on the kept blocks
            T = projection_direct(self.A, blocks)
            H = self._H[:self.k, :max(2 * m, 1)].copy()
            pd = ProjectionData(H=H, T=T, tau=None, alpha11=self.alpha11,
                                alpha12=self.alpha12, alpha22=self.alpha22,
                                shifts=tuple(self.shifts), m=m)
            return basis, pd
        H = self._H[:2 * m + 2, :2 * m].copy()
        T, tau = self.projection()
        return basis, ProjectionData(H=H, T=T, tau=tau,
                                     alpha11=self.alpha11,
                                     alpha12=self.alpha12,
                                     alpha22=self.alpha22,
                                     shifts=tuple(self.shifts), m=m)


def gera_step(state, s):
    """One outer step of the process (see :meth:`GeraProcess.step`)."""
    return state.step(s)


def gera_build(A, V, shifts, m=None, breakdown_tol=BREAKDOWN_TOL):
    """Run the full process and return (KrylovBasis, ProjectionData).

    ``shifts`` is either a sequence of m real shifts or a callable
    ``shifts(state) -> float`` queried before each outer step (``m`` is then
    required).  On lucky breakdown the truncated basis is returned with its
    ``breakdown`` flag set and T computed by direct projection.
    """
    state = GeraProcess(A, V, breakdown_tol=breakdown_tol)
    if callable(shifts):
        if m is None:
            raise ValueError("m is required with a shift callback")
        picker, count = shifts, m
    else:
        shifts = [float(s) for s in shifts]
        if any(isinstance(s, complex) for s in shifts):
            raise ValueError("complex shifts not supported")
        if m is not None and m != len(shifts):
            raise ValueError("m inconsistent with number of shifts")
        picker, count = None, len(shifts)
    if count < 1:
        raise ValueError("at least one outer step is required")
    for j in range(count):
        s = picker(state) if picker is not None else shifts[j]
        if not state.step(s):
            break
    return state.finalize()


# ---------------------------------------------------------------------------
# Recovery of T from the recursion coefficients
# ---------------------------------------------------------------------------

def _recover_T_arrays(H, m, a11, a12, a22, shifts):
    """Columns of T via the coefficient recurrences; no products with A.

    Column vectors live in R^{2m+2}; the top 2m rows form T_{2m} and row
    2m+1 of the last two columns is the coupling row tau.
    """
    K = 2 * m + 2
    full = np.zeros((K, 2 * m))
    # odd columns are copied from H
    for j in range(1, m + 1):
        full[:, 2 * j - 2] = H[:K, 2 * j - 2]
    # column 2 from the startup scalars
    if a22 == 0.0:
        raise BreakdownError("alpha_{2,2} vanished: column 2 undefined")
    s1 = shifts[0]
    col = -a12 * H[:K, 0]
    col[0] += a11 + s1 * a12
    col[1] += s1 * a22
    full[:, 1] = col / a22
    # remaining even columns
    for j in range(1, m):
        sj = shifts[j - 1]
        hc = 2 * j - 1
        hnorm = H[2 * j + 1, hc]
        if hnorm == 0.0:
            raise BreakdownError(
                f"normalizer h_{{{2*j+2},{2*j}}} vanished")
        num = np.zeros(K)
        num[2 * j + 1] = sj * hnorm
        num[2 * j - 1] += 1.0
        for i in range(2 * j + 1):
            hij = H[i, hc]
            if hij != 0.0:
                num -= hij * full[:, i]
                num[i] += hij * sj
        full[:, 2 * j + 1] = num / hnorm
    T = full[:2 * m, :].copy()
    tau = full[2 * m, 2 * m - 2:2 * m].copy()
    return T, tau


def recover_T(pd):
    """(T_{2m}, tau) from the stored coefficients (general matrices)."""
    return _recover_T_arrays(pd.H, pd.m, pd.alpha11, pd.alpha12,
                             pd.alpha22, pd.shifts)


def recover_T_symmetric(pd):
    """T_{2m} for symmetric A: pentadiagonal, via the short recurrences.

    The caller asserts symmetry of A; entries are filled in symmetric pairs.
    """
    m = pd.m
    H = pd.H
    a11, a12, a22 = pd.alpha11, pd.alpha12, pd.alpha22
    if a22 == 0.0:
        raise BreakdownError("alpha_{2,2} vanished")
    shifts = pd.shifts
    K = 2 * m
    T = np.zeros((K, K))

    def put(i, j, v):
        if i < K and j < K:
            T[i, j] = v
            T[j, i] = v

    # odd columns: the in-band part of H
    for j in range(1, m + 1):
        c = 2 * j - 2
        for i in range(max(0, c - 2), min(K, c + 3)):
            put(i, c, H[i, c])
    # column 2
    s1 = shifts[0]
    put(0, 1, (a11 - (T[0, 0] - s1) * a12) / a22)
    put(1, 1, s1 - T[1, 0] * a12 / a22)
    put(2, 1, -H[2, 0] * a12 / a22)
    # columns 4, 6, ...
    for j in range(1, m):
        sj = shifts[j - 1]
        hc = 2 * j - 1
        hup = H[2 * j, hc]           # h_{2j+1,2j}
        hnorm = H[2 * j + 1, hc]     # h_{2j+2,2j}
        if hnorm == 0.0:
            raise BreakdownError(
                f"normalizer h_{{{2*j+2},{2*j}}} vanished")
        acc = sj * hup
        for i in range(2 * j - 2, 2 * j + 1):
            acc -= T[2 * j, i] * H[i, hc]
        put(2 * j, 2 * j + 1, acc / hnorm)
        put(2 * j + 1, 2 * j + 1, sj - T[2 * j + 1, 2 * j] * hup / hnorm)
        if 2 * j + 2 < K:
            # row 2j+3 of the last column belongs to tau, not to T
            put(2 * j + 2, 2 * j + 1, -T[2 * j + 2, 2 * j] * hup / hnorm)
    return T


# ---------------------------------------------------------------------------
# Verification utilities
# ---------------------------------------------------------------------------

def projection_direct(A, blocks, k=None):
    """The projection V^T <> A V computed explicitly (verification path)."""
    blocks = np.asarray(blocks)
    if k is not None:
        blocks = blocks[:k]
    AV = np.stack([A.matvec(b) for b in blocks])
    return diamond_product(blocks, AV)


def arnoldi_residual(A, basis, pd):
    """Relative Frobenius residual of the decomposition

    A V_{2m} = V_{2m} (T (x) I_p) + V_{2m+1} (tau E_m^T (x) I_p).

    After a breakdown the relation is checked on the truncated basis with
    no coupling term.
    """
    blocks = basis.blocks
    if pd.tau is None:
        k = blocks.shape[0]
        V = blocks
        T = pd.T
    else:
        k = 2 * pd.m
        V = blocks[:k]
        T = pd.T
    AV = np.stack([A.matvec(b) for b in V])
    recon = np.einsum("ij,inp->jnp", T, V)
    if pd.tau is not None:
        recon[k - 2] += pd.tau[0] * blocks[k]
        recon[k - 1] += pd.tau[1] * blocks[k]
    num = np.linalg.norm((AV - recon).ravel())
    den = np.linalg.norm(AV.ravel())
    return num / den if den > 0 else num
