"""Test-problem generators and Matrix Market I/O.

All generators are deterministic: the same parameters produce bit-identical
matrices, and random blocks come from a seeded PCG64 generator so runs are
reproducible across machines.
"""

import numpy as np

from .sparse import CSRMatrix

__all__ = [
    "gen_cfdd",
    "gen_toeplitz",
    "gen_blockdiag",
    "gen_pde_block",
    "random_block",
    "read_matrix_market",
    "write_matrix_market",
    "build_problem",
]


def gen_cfdd(which, n0, convection_scale=1.0):
    """Centered finite-difference discretization of an elliptic operator.

    ``which`` selects the convection/reaction coefficients:

      L1: -Lap(u) + 50(x+y) u_x + 50(x+y) u_y
      L2: -Lap(u) + sin(xy) u_x + e^x u_y + (x+y) u
      L3: -Lap(u) + (x+y) u_x + (x-y) u_y

    on the unit square with homogeneous Dirichlet boundaries, n0 inner grid
    points per direction (n = n0^2), grid x_i = i h, y_j = j h, h = 1/(n0+1),
    rows ordered lexicographically in (i, j).  ``convection_scale`` scales
    the first-order terms (0 recovers the plain 5-point Laplacian; testing
    hook).
    """
    if which not in ("L1", "L2", "L3"):
        raise ValueError(f"unknown operator {which!r}")
    if n0 < 3:
        raise ValueError("n0 must be at least 3")
    n0 = int(n0)
    h = 1.0 / (n0 + 1)
    idx = np.arange(n0)
    x = (idx[:, None] + 1) * h + np.zeros((1, n0))     # x_i by rows
    y = np.zeros((n0, 1)) + (idx[None, :] + 1) * h     # y_j by cols
    if which == "L1":
        cx = 50.0 * (x + y)
        cy = 50.0 * (x + y)
        react = np.zeros_like(x)
    elif which == "L2":
        cx = np.sin(x * y)
        cy = np.exp(x)
        react = x + y
    else:
        cx = x + y
        cy = x - y
        react = np.zeros_like(x)
    cx = convection_scale * cx
    cy = convection_scale * cy

    n = n0 * n0
    r = (idx[:, None] * n0 + idx[None, :])
    rows, cols, vals = [], [], []

    def add(rr, cc, vv):
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(vv.ravel())

    add(r, r, 4.0 / h**2 + react)
    # x-neighbors live n0 apart, y-neighbors 1 apart
    add(r[1:, :], r[:-1, :], -1.0 / h**2 - cx[1:, :] / (2 * h))
    add(r[:-1, :], r[1:, :], -1.0 / h**2 + cx[:-1, :] / (2 * h))
    add(r[:, 1:], r[:, :-1], -1.0 / h**2 - cy[:, 1:] / (2 * h))
    add(r[:, :-1], r[:, 1:], -1.0 / h**2 + cy[:, :-1] / (2 * h))
    return CSRMatrix.from_coo(n, np.concatenate(rows),
                              np.concatenate(cols), np.concatenate(vals))


def gen_toeplitz(n, variant="printed"):
    """Symmetric dense test matrix with entries 1/(1 + |i +- j|), 1-based.

    ``variant="printed"`` uses a_ij = 1/(1+|i+j|): symmetric and positive
    definite in exact arithmetic (a Hankel moment matrix), but numerically
    rank deficient already for moderate n.  ``variant="classic"`` uses the
    Toeplitz form a_ij = 1/(1+|i-j|), whose spectrum is bounded away from
    zero; this is the matrix the printed experiments actually behave like,
    and the one the benchmark tables use.
    """
    if n < 1:
        raise ValueError("n must be positive")
    i = np.arange(1, n + 1)
    if variant == "printed":
        M = 1.0 / (1.0 + np.abs(i[:, None] + i[None, :]))
    elif variant == "classic":
        M = 1.0 / (1.0 + np.abs(i[:, None] - i[None, :]))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return CSRMatrix.from_dense(M)


def gen_blockdiag(n):
    """Block diagonal matrix of 2x2 blocks [[a_i, c], [-c, a_i]].

    c = 1/2 and a_i = (2i-1)/(n+1); eigenvalues a_i +- i c, so the spectrum
    has real parts in (0, 1).  n must be even.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be positive and even")
    half = n // 2
    a = (2.0 * np.arange(1, half + 1) - 1.0) / (n + 1)
    c = 0.5
    base = 2 * np.arange(half)
    rows = np.concatenate([base, base, base + 1, base + 1])
    cols = np.concatenate([base, base + 1, base, base + 1])
    vals = np.concatenate([a, np.full(half, c), np.full(half, -c), a])
    return CSRMatrix.from_coo(n, rows, cols, vals)


def gen_pde_block(n0):
    """Initial block of the evolution example: three sine products.

    V[n0 (i-1) + j, k] = u0_k(x_i, y_j) with x_i = (i-1)/(n0-1) on the full
    closed grid (this block's grid includes the boundary, unlike the
    operator grid).
    """
    if n0 < 2:
        raise ValueError("n0 must be at least 2")
    g = np.arange(n0) / (n0 - 1)
    X = g[:, None] + np.zeros((1, n0))
    Y = np.zeros((n0, 1)) + g[None, :]
    comps = [np.sin(np.pi * X) * np.sin(np.pi * Y),
             np.sin(2 * np.pi * X) * np.sin(np.pi * Y),
             np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)]
    return np.stack([c.ravel() for c in comps], axis=1)


def random_block(n, p, seed):
    """n x p block with entries uniform on [0, 1), PCG64-seeded."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.random((n, p))


# ---------------------------------------------------------------------------
# Matrix Market coordinate format
# ---------------------------------------------------------------------------

def read_matrix_market(path):
    """Read a real coordinate Matrix Market file into a CSRMatrix.

    General and symmetric storage are supported; symmetric files are
    expanded to full storage, 1-based indices converted, and duplicate
    entries summed.
    """
    with open(path, "r") as fh:
        header = fh.readline()
        parts = header.strip().split()
        if len(parts) < 5 or parts[0] != "%%MatrixMarket" \
                or parts[1].lower() != "matrix":
            raise ValueError(f"{path}: malformed MatrixMarket header")
        fmt, field, symmetry = (p.lower() for p in parts[2:5])
        if fmt != "coordinate":
            raise ValueError(f"{path}: only coordinate format is supported")
        if field != "real":
            raise ValueError(f"{path}: only real-valued matrices are "
                             f"supported, got field {field!r}")
        if symmetry not in ("general", "symmetric"):
            raise ValueError(f"{path}: unsupported symmetry {symmetry!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        dims = line.split()
        if len(dims) != 3:
            raise ValueError(f"{path}: malformed size line {line!r}")
        nrows, ncols, nnz = (int(d) for d in dims)
        if nrows != ncols:
            raise ValueError(f"{path}: matrix must be square, "
                             f"got {nrows}x{ncols}")
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2, max_rows=nnz) \
            if nnz else np.zeros((0, 3))
    if data.shape != (nnz, 3):
        raise ValueError(f"{path}: expected {nnz} entries with 3 fields, "
                         f"got array of shape {data.shape}")
    rows = data[:, 0].astype(np.int64) - 1
    cols = data[:, 1].astype(np.int64) - 1
    vals = data[:, 2]
    if len(rows) and (rows.min() < 0 or rows.max() >= nrows
                      or cols.min() < 0 or cols.max() >= ncols):
        raise ValueError(f"{path}: index out of bounds")
    if symmetry == "symmetric":
        off = rows != cols
        r0, c0 = rows, cols
        rows = np.concatenate([r0, c0[off]])
        cols = np.concatenate([c0, r0[off]])
        vals = np.concatenate([vals, vals[off]])
    return CSRMatrix.from_coo(nrows, rows, cols, vals)


def write_matrix_market(path, A, comment=None):
    """Write a CSRMatrix as a real general coordinate Matrix Market file."""
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n} {A.n} {A.nnz}\n")
        rows = np.repeat(np.arange(A.n), np.diff(A.indptr))
        for r, c, v in zip(rows, A.indices, A.data):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


# ---------------------------------------------------------------------------
# CLI problem construction
# ---------------------------------------------------------------------------

def build_problem(source, n0=None, n=None, p=5, block="random-uniform",
                  seed=0, mm_path=None, toeplitz_variant="classic"):
    """(CSRMatrix, Block) for a named problem source.

    Sources: cfdd-L1, cfdd-L2, cfdd-L3 (need n0), toeplitz, blockdiag
    (need n), matrix-market (needs mm_path).  Blocks: random-uniform
    (seeded), pde-sines (p = 3, CFDD sources), unit (normalized all-ones).
    """
    if source.startswith("cfdd-"):
        if n0 is None:
            raise ValueError(f"{source} needs n0")
        A = gen_cfdd(source.split("-", 1)[1], n0)
    elif source == "toeplitz":
        if n is None:
            raise ValueError("toeplitz needs n")
        A = gen_toeplitz(n, variant=toeplitz_variant)
    elif source == "blockdiag":
        if n is None:
            raise ValueError("blockdiag needs n")
        A = gen_blockdiag(n)
    elif source == "matrix-market":
        if mm_path is None:
            raise ValueError("matrix-market needs a path")
        A = read_matrix_market(mm_path)
    else:
        raise ValueError(f"unknown problem source {source!r}")

    if block == "random-uniform":
        V = random_block(A.n, p, seed)
    elif block == "pde-sines":
        if not source.startswith("cfdd-"):
            raise ValueError("pde-sines block requires a cfdd source")
        V = gen_pde_block(n0)
    elif block == "unit":
        V = np.ones((A.n, p)) / np.sqrt(A.n * p)
    else:
        raise ValueError(f"unknown block kind {block!r}")
    return A, V
