"""Projection-based approximation of f(A)V and the adaptive exponential.

The large problem is compressed to f(T) e_1 on the small projected matrix;
f(T) itself is evaluated by eigendecomposition when the eigenvector basis is
well conditioned, with a scaling-and-squaring fallback for the exponential.
The adaptive driver extends the basis one shift at a time, testing the cheap
residual |tau E^T exp(-tT) e_1| after every step.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .arnoldi import GeraProcess
from .blocks import as_block, basis_combine, frob_norm
from .shifts import ShiftState, estimate_spectrum, next_shift_exp

__all__ = [
    "MatFunSpec",
    "MatFunDomainError",
    "small_matfun",
    "approx_fAV",
    "exp_residual_norm",
    "exp_action_adaptive",
    "ExpRunReport",
]

# eigenvector condition number above which the eig route is distrusted
_EIGCOND_MAX = 1e6


class MatFunDomainError(ValueError):
    """Spectrum of the projected matrix violates the function's domain."""


@dataclass(frozen=True)
class MatFunSpec:
    """A scalar function to be lifted to matrix argument."""

    kind: str
    param: float = None
    fn: object = field(default=None, compare=False)

    @classmethod
    def exp_neg(cls, t):
        """f(z) = exp(-t z), t > 0."""
        if not t >= 0:
            raise ValueError("t must be nonnegative")
        return cls("exp-neg-t", float(t))

    @classmethod
    def sqrt(cls):
        return cls("sqrt")

    @classmethod
    def log(cls):
        return cls("log")

    @classmethod
    def exp_neg_sqrt(cls):
        return cls("exp-neg-sqrt")

    @classmethod
    def resolvent(cls, sigma):
        return cls("resolvent", float(sigma))

    @classmethod
    def custom(cls, fn):
        """Arbitrary scalar function applied to (complex) eigenvalues."""
        return cls("custom", fn=fn)

    @classmethod
    def parse(cls, name):
        """Instantiate from a CLI-style name such as 'sqrt' or 'exp:0.5'."""
        if name == "sqrt":
            return cls.sqrt()
        if name == "log":
            return cls.log()
        if name == "exp-neg-sqrt":
            return cls.exp_neg_sqrt()
        if name.startswith("exp:"):
            return cls.exp_neg(float(name.split(":", 1)[1]))
        if name.startswith("resolvent:"):
            return cls.resolvent(float(name.split(":", 1)[1]))
        raise ValueError(f"unknown function spec {name!r}")

    def scalar(self, z):
        z = np.asarray(z)
        if self.kind == "exp-neg-t":
            return np.exp(-self.param * z)
        if self.kind == "sqrt":
            return np.sqrt(z)
        if self.kind == "log":
            return np.log(z)
        if self.kind == "exp-neg-sqrt":
            return np.exp(-np.sqrt(z))
        if self.kind == "resolvent":
            return 1.0 / (z - self.param)
        if self.kind == "custom":
            return self.fn(z)
        raise ValueError(f"unknown kind {self.kind!r}")

    def check_domain(self, eigs):
        eigs = np.asarray(eigs)
        if self.kind in ("sqrt", "log", "exp-neg-sqrt"):
            if np.min(eigs.real) <= 0.0:
                raise MatFunDomainError(
                    f"{self.kind} needs the spectrum in the open right "
                    f"half-plane; found Re(lambda) = {eigs.real.min():.3e}")
        elif self.kind == "resolvent":
            gap = np.min(np.abs(eigs - self.param))
            scale = max(1.0, float(np.abs(eigs).max()))
            if gap <= 1e-14 * scale:
                raise MatFunDomainError(
                    f"resolvent shift {self.param} coincides with an "
                    "eigenvalue of the projected matrix")


# ---------------------------------------------------------------------------
# Dense evaluation of f(T) for the small projected matrices
# ---------------------------------------------------------------------------

# Pade-13 constants for the scaling-and-squaring exponential
_PADE13_B = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0)
_PADE13_THETA = 5.371920351148152


def _expm_pade13(M):
    n = M.shape[0]
    nrm = np.linalg.norm(M, 1)
    squarings = 0
    if nrm > _PADE13_THETA:
        squarings = max(0, int(math.ceil(math.log2(nrm / _PADE13_THETA))))
        M = M / (2.0 ** squarings)
    b = _PADE13_B
    I = np.eye(n)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M2 @ M4
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * I)
    V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
         + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * I)
    F = np.linalg.solve(-U + V, U + V)
    for _ in range(squarings):
        F = F @ F
    return F


def small_matfun(T, f):
    """f(T) for a small dense T.

    Symmetric matrices go through the orthogonal eigendecomposition; general
    ones through the (possibly complex) eigendecomposition when the
    eigenvector matrix is decently conditioned.  A defective exponential
    falls back to scaling and squaring; other functions raise.
    """
    T = np.asarray(T, dtype=np.float64)
    k = T.shape[0]
    if T.shape != (k, k):
        raise ValueError("T must be square")
    scale = max(1.0, float(np.abs(T).max()))
    if k > 1 and np.abs(T - T.T).max() <= 1e-12 * scale or k == 1:
        w, Q = np.linalg.eigh(0.5 * (T + T.T))
        f.check_domain(w)
        return (Q * f.scalar(w)) @ Q.T
    w, S = np.linalg.eig(T)
    cond = np.linalg.cond(S)
    if cond <= _EIGCOND_MAX:
        f.check_domain(w)
        F = (S * f.scalar(w)) @ np.linalg.inv(S)
        return F.real
    if f.kind == "exp-neg-t":
        return _expm_pade13(-f.param * T)
    raise np.linalg.LinAlgError(
        f"eigenvector basis too ill conditioned (cond ~ {cond:.2e}) to "
        f"evaluate {f.kind} on a non-normal matrix")


def approx_fAV(basis, pd, f, normV):
    """The projected approximation normV * V_{2m} (f(T) e_1 (x) I_p)."""
    k = pd.T.shape[0]
    y = small_matfun(pd.T, f)[:, 0]
    return normV * basis_combine(basis.blocks[:k], y)


# ---------------------------------------------------------------------------
# Action of the matrix exponential
# ---------------------------------------------------------------------------

def exp_residual_norm(pd, t, T=None, tau=None):
    """The stopping functional |tau E_m^T exp(-t T) e_1|.

    This is the Frobenius norm of the ODE residual U' + A U for the run
    started from the F-normalized block; scale by the initial block norm for
    the unnormalized residual.  Zero after a breakdown (the subspace is
    invariant, the small solution exact).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    T = pd.T if T is None else T
    tau = pd.tau if tau is None else tau
    if tau is None:
        return 0.0
    y = small_matfun(T, MatFunSpec.exp_neg(t))[:, 0]
    return float(abs(tau[0] * y[-2] + tau[1] * y[-1]))


@dataclass
class ExpRunReport:
    """Outcome of the adaptive exponential run."""

    iterations: int
    residual_history: list
    shifts_used: list
    converged: bool

    @property
    def subspace_dimension(self):
        return 2 * self.iterations


def exp_action_adaptive(A, V, t, tol, itermax=60, spectrum=None):
    """Approximate exp(-tA)V adaptively; returns (block, ExpRunReport).

    Intended for matrices whose spectrum lies in [0, inf).  The first shift
    parameter is the lambda_min estimate; each non-converged step picks the
    next one by the ripple search, and the basis grows until the residual
    functional drops below tol.  Shifts s from the spectral interval enter
    the process as poles -s, i.e. through solves with (A + s I).
    """
    V = as_block(V)
    if not t > 0:
        raise ValueError("t must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    lmin, lmax = estimate_spectrum(A) if spectrum is None else spectrum
    if lmin < 0:
        warnings.warn(f"lambda_min estimate {lmin:.3e} is negative; the "
                      "adaptive exponential assumes a spectrum in [0, inf)",
                      RuntimeWarning)
    proc = GeraProcess(A, V)
    normV = proc.normV
    s = lmin
    history = []
    converged = False
    T = tau = None
    for m in range(1, itermax + 1):
        if not proc.step(-s):
            # lucky breakdown: the projected solution is exact
            history.append(0.0)
            converged = True
            break
        T, tau = proc.projection()
        # residual of U' = -AU from U(0) = V, i.e. normV times the
        # normalized-run functional
        res = normV * exp_residual_norm(None, t, T=T, tau=tau)
        history.append(res)
        if res <= tol:
            converged = True
            break
        state = ShiftState(nodes=np.linalg.eigvals(T),
                           poles=tuple(proc.shifts),
                           lambda_min=lmin, lambda_max=lmax)
        s = next_shift_exp(state)
    basis, pd = proc.finalize()
    U = approx_fAV(basis, pd, MatFunSpec.exp_neg(t), normV)
    report = ExpRunReport(iterations=proc.m, residual_history=history,
                          shifts_used=list(proc.shifts), converged=converged)
    return U, report
