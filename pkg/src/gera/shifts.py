"""Skeleton approximation of the resolvent and adaptive shift machinery.

The rational nodal function g pairs the interpolation nodes (Ritz values of
the projection) with the poles of the Krylov space.  Its magnitude controls
both the shifted-system residuals, R(sigma) = g(A) R_0 / g(sigma), and the
exponential error bound, so both adaptive procedures reduce to locating
extrema of |g| stably in log space.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .sparse import factor_shifted

__all__ = [
    "ShiftState",
    "log_abs_g",
    "g_ratio",
    "skeleton_f",
    "next_shift_exp",
    "estimate_spectrum",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ShiftState:
    """Interpolation nodes, pole set, and spectral interval estimates."""

    nodes: np.ndarray           # Ritz values, possibly complex
    poles: tuple                # real poles of the Krylov space
    lambda_min: float = None
    lambda_max: float = None

    def __post_init__(self):
        self.nodes = np.atleast_1d(np.asarray(self.nodes))
        self.poles = tuple(float(p) for p in self.poles)


def _nodes_for_order(state, order):
    if order == "2m":
        return state.nodes
    if order == "m":
        m = len(state.poles)
        if m == 0 or m > len(state.nodes):
            raise ValueError(f"order 'm' needs {m} of {len(state.nodes)} nodes")
        idx = np.argsort(state.nodes.real)
        return state.nodes[idx][:m]
    raise ValueError(f"order must be 'm' or '2m', got {order!r}")


def log_abs_g(z, state, order="2m"):
    """log |g(z)| = sum log|z - node| - sum log|z - pole|.

    Returns -inf when z hits a node (g vanishes) and +inf when z hits a
    pole.  Complex nodes contribute their complex modulus.
    """
    nodes = _nodes_for_order(state, order)
    with np.errstate(divide="ignore"):
        num = float(np.sum(np.log(np.abs(z - nodes))))
        den = float(np.sum(np.log(np.abs(z - np.asarray(state.poles))))) \
            if state.poles else 0.0
    if np.isneginf(num):        # z hits a node: g vanishes
        return -np.inf
    if np.isneginf(den):        # z hits a pole: g blows up
        return np.inf
    return num - den


def _sign_g(z, nodes, poles):
    # sign of the real nodal function; complex-conjugate node pairs
    # contribute a positive factor
    s = 1.0
    for lam in nodes:
        if abs(lam.imag) == 0.0 and z < lam.real:
            s = -s
    for p in poles:
        if z < p:
            s = -s
    return s


def g_ratio(z1, z2, state, order="2m"):
    """Signed ratio g(z1) / g(z2) for real arguments, stable in log space."""
    nodes = _nodes_for_order(state, order)
    l1 = log_abs_g(z1, state, order)
    l2 = log_abs_g(z2, state, order)
    if np.isinf(l2) and l2 > 0:
        return 0.0
    if np.isinf(l1) and l1 < 0:
        return 0.0
    sign = _sign_g(z1, nodes, state.poles) * _sign_g(z2, nodes, state.poles)
    return sign * float(np.exp(l1 - l2))


# ---------------------------------------------------------------------------
# Skeleton approximation of (lambda - s)^{-1}
# ---------------------------------------------------------------------------

def _solve_full_pivot(M, b):
    """Gaussian elimination with complete pivoting (small systems)."""
    M = M.astype(np.float64, copy=True)
    b = b.astype(np.float64, copy=True)
    n = M.shape[0]
    col_perm = np.arange(n)
    for k in range(n):
        sub = np.abs(M[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += k
        j += k
        if M[i, j] == 0.0:
            raise np.linalg.LinAlgError("singular Cauchy system")
        if i != k:
            M[[k, i]] = M[[i, k]]
            b[[k, i]] = b[[i, k]]
        if j != k:
            M[:, [k, j]] = M[:, [j, k]]
            col_perm[[k, j]] = col_perm[[j, k]]
        fac = M[k + 1:, k] / M[k, k]
        M[k + 1:, k + 1:] -= np.outer(fac, M[k, k + 1:])
        b[k + 1:] -= fac * b[k]
    pivmax = np.abs(np.diag(M)).max()
    pivmin = np.abs(np.diag(M)).min()
    if pivmin == 0.0 or pivmax / pivmin > 1e12:
        warnings.warn("Cauchy system is ill conditioned "
                      f"(pivot ratio {pivmax / max(pivmin, 1e-300):.2e})",
                      RuntimeWarning)
    y = np.zeros(n)
    for k in range(n - 1, -1, -1):
        y[k] = (b[k] - M[k, k + 1:] @ y[k + 1:]) / M[k, k]
    x = np.zeros(n)
    x[col_perm] = y
    return x


def skeleton_f(lam, s, state):
    """The two-level separable approximation of 1/(lam - s).

    Interpolates the resolvent kernel at every node in the first argument
    and at every pole in the second; its relative error is the ratio
    g(lam)/g(s) of the full-order nodal function.
    """
    lam = float(lam)
    s = float(s)
    if lam == s:
        raise ValueError("lambda == s is a removable singularity of the "
                         "kernel; evaluate 1/(lambda-s) directly instead")
    m = len(state.poles)
    nodes_m = _nodes_for_order(state, "m").real
    poles = np.asarray(state.poles)
    M = 1.0 / (nodes_m[:, None] - poles[None, :])
    rhs = 1.0 / (nodes_m - s)
    row = 1.0 / (lam - poles)
    f_mm = float(row @ _solve_full_pivot(M, rhs))
    corr = (g_ratio(lam, s, state, "2m") - g_ratio(lam, s, state, "m"))
    return f_mm - corr / (lam - s)


# ---------------------------------------------------------------------------
# Adaptive shift for the exponential
# ---------------------------------------------------------------------------

def _exp_objective(x, state):
    # log of 1/|g(-x)|: the residual-bound surrogate on the spectral
    # interval, with x > 0 standing in for the inverse-Laplace contour
    return -log_abs_g(-x, state, "2m")


def _golden_max(fun, a, b, iters=60):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
        if b - a < 1e-14 * max(abs(a), abs(b), 1.0):
            break
    return 0.5 * (a + b)


def next_shift_exp(state):
    """Next shift parameter in [lambda_min, lambda_max] for the exponential.

    Maximizes 1/|g(-s)| over the spectral interval.  The objective vanishes
    exactly at the mirrored existing poles, so the search runs one
    golden-section pass per sub-interval between consecutive mirrored poles
    (one ripple each) plus the interval endpoints.
    """
    lo = float(state.lambda_min)
    hi = float(state.lambda_max)
    if not hi > lo:
        raise ValueError("lambda_min must be below lambda_max")
    distinct = np.unique(np.round(state.nodes.real, 12))
    if distinct.size < 2:
        return 0.5 * (lo + hi)
    span = hi - lo
    mirrored = sorted({-p for p in state.poles if lo < -p < hi})
    edges = [lo] + mirrored + [hi]
    cands = [lo, hi]
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-10 * span:
            continue
        xs = np.linspace(a, b, 35)[1:-1]
        vals = [_exp_objective(x, state) for x in xs]
        i = int(np.argmax(vals))
        left = xs[i - 1] if i > 0 else a
        right = xs[i + 1] if i < len(xs) - 1 else b
        cands.append(_golden_max(lambda x: _exp_objective(x, state),
                                 left, right))
    scores = np.array([_exp_objective(x, state) for x in cands])
    order = np.argsort(-scores)
    guard = 1e-12 * max(1.0, span)
    for idx in order:
        x = float(np.clip(cands[idx], lo, hi))
        if np.isinf(scores[idx]) and scores[idx] < 0:
            continue
        if all(abs(x - (-p)) > guard for p in state.poles):
            return x
    # every candidate collides with a mirrored pole: fall back to the
    # point farthest from the pole set
    grid = np.linspace(lo, hi, 1001)
    dist = np.min(np.abs(grid[:, None] + np.asarray(state.poles)[None, :]),
                  axis=1) if state.poles else np.ones_like(grid)
    return float(grid[int(np.argmax(dist))])


# ---------------------------------------------------------------------------
# Spectral interval estimation
# ---------------------------------------------------------------------------

def estimate_spectrum(A, tol=1e-3, maxiter=200, seed=0):
    """(lambda_min, lambda_max) estimates by power and inverse iteration.

    Rayleigh quotients give the real-part estimates used to anchor the
    adaptive shifts; non-convergence only warns and returns best values.
    """
    rng = np.random.default_rng(seed)
    n = A.n
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lmax = 0.0
    ok_max = False
    for _ in range(maxiter):
        y = A.matvec(x)
        est = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        x = y / ny
        if abs(est - lmax) <= 0.1 * tol * max(abs(est), 1e-300):
            lmax = est
            ok_max = True
            break
        lmax = est
    fact = factor_shifted(A, 0.0)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lmin = 0.0
    ok_min = False
    for _ in range(maxiter):
        z = fact.solve(x)
        inv_est = float(x @ z)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        x = z / nz
        est = 1.0 / inv_est if inv_est != 0.0 else 0.0
        if abs(est - lmin) <= 0.1 * tol * max(abs(est), 1e-300):
            lmin = est
            ok_min = True
            break
        lmin = est
    if not (ok_max and ok_min):
        warnings.warn("spectral interval estimation did not converge to "
                      f"{tol:g}; returning best estimates ({lmin:.3e}, "
                      f"{lmax:.3e})", RuntimeWarning)
    return lmin, lmax
