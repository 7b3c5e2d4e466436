"""Command line interface: matfun / shifted / expode / bench.

Every command prints CSV (header row first) to stdout or --output.  Columns
are documented in docs/CSV_SCHEMA.md.  Runs are deterministic for a fixed
--seed.

Pole convention: a pole parameter p > 0 from --shifts enters the process
through solves with (A + p I), i.e. as the left-half-plane pole -p, which
is the convention of the f(A)V experiments; the shifted-system command uses
its sigma values directly.
"""

import argparse
import csv
import sys

import numpy as np

from . import baselines
from .arnoldi import gera_build
from .blocks import frob_norm
from .matfun import MatFunSpec, approx_fAV, exp_action_adaptive, small_matfun
from .problems import build_problem
from .reference import DENSE_ORACLE_MAX_N, dense_fAV
from .shifted import ShiftedProblem, solve_restarted
from .shifts import estimate_spectrum


def _parse_shift_spec(spec):
    """'linear:a:k' -> [a, 2a, ..., ka]; 'list:v1,v2,...' -> literal values."""
    if spec.startswith("linear:"):
        try:
            _, a, k = spec.split(":")
            a = float(a)
            k = int(k)
        except ValueError as exc:
            raise ValueError(f"bad shift spec {spec!r}") from exc
        if k < 1:
            raise ValueError(f"bad shift spec {spec!r}: need k >= 1")
        return [a * (i + 1) for i in range(k)]
    if spec.startswith("list:"):
        vals = [float(v) for v in spec[len("list:"):].split(",") if v]
        if not vals:
            raise ValueError(f"bad shift spec {spec!r}: empty list")
        return vals
    raise ValueError(f"bad shift spec {spec!r} (use linear:a:k or list:...)")


def _parse_sigma_spec(spec):
    """'uniform:a:b:k' -> k evenly spaced values on [a, b]; or 'list:...'."""
    if spec.startswith("uniform:"):
        try:
            _, a, b, k = spec.split(":")
            return list(np.linspace(float(a), float(b), int(k)))
        except ValueError as exc:
            raise ValueError(f"bad sigma spec {spec!r}") from exc
    if spec.startswith("list:"):
        return [float(v) for v in spec[len("list:"):].split(",") if v]
    raise ValueError(f"bad sigma spec {spec!r} (use uniform:a:b:k or list:...)")


def _emit(rows, header, output):
    out = open(output, "w", newline="") if output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if output:
            out.close()


def _problem_from_args(args, block=None, p=None):
    return build_problem(
        args.problem,
        n0=getattr(args, "n0", None),
        n=getattr(args, "n", None),
        p=p if p is not None else getattr(args, "p", 5),
        block=block or getattr(args, "block", None) or "random-uniform",
        seed=getattr(args, "seed", 0),
        mm_path=getattr(args, "mm_path", None),
        toeplitz_variant=getattr(args, "toeplitz_variant", "classic"),
    )


def _residual_proxy(T, rvec, f, normV):
    y = small_matfun(T, f)[:, 0]
    return float(normV * abs(rvec @ y))


def _run_matfun(args):
    A, V = _problem_from_args(args)
    f = MatFunSpec.parse(args.f)
    normV = frob_norm(V)
    method = args.method
    if method in ("gera", "gea", "ra") or args.shifts:
        poles = _parse_shift_spec(args.shifts) if args.shifts else None
    if method == "gera":
        if not args.shifts:
            raise ValueError("method gera needs --shifts")
        core = [-s for s in poles]
        basis, pd = gera_build(A, V, core)
        if args.dim and args.dim != 2 * pd.m:
            raise ValueError(f"--dim {args.dim} inconsistent with "
                             f"{len(core)} shifts (dim = {2 * pd.m})")
        dim = pd.T.shape[0]
        approx = approx_fAV(basis, pd, f, normV)
        T, rvec = pd.T, None
        if pd.tau is not None:
            rvec = np.zeros(dim)
            rvec[-2:] = pd.tau
    elif method == "gea":
        m = (args.dim or 20) // 2
        basis, pd = baselines.gea_build(A, V, m)
        dim = pd.T.shape[0]
        approx = approx_fAV(basis, pd, f, normV)
        T, rvec = pd.T, None
        if pd.tau is not None:
            rvec = np.zeros(dim)
            rvec[-2:] = pd.tau
    elif method == "ra":
        if not args.shifts:
            raise ValueError("method ra needs --shifts")
        blocks, T, breakdown = baselines.ra_build(A, V, [-s for s in poles])
        dim = T.shape[0]
        approx = baselines.project_fAV(blocks, T, f, normV)
        rvec = None
    elif method == "sga":
        k = args.dim or 20
        blocks, H, breakdown = baselines.sga_build(A, V, k)
        dim = H.shape[1]
        T = H[:dim, :dim]
        approx = baselines.project_fAV(blocks, T, f, normV)
        rvec = None
        if not breakdown:
            rvec = np.zeros(dim)
            rvec[-1] = H[dim, dim - 1]
    else:
        raise ValueError(f"unknown method {method!r}")

    if A.n <= DENSE_ORACLE_MAX_N:
        exact = dense_fAV(A, f, V)
        err = float(np.linalg.norm(exact - approx) / np.linalg.norm(exact))
        kind = "relative-error"
    elif rvec is not None:
        err = _residual_proxy(T, rvec, f, normV)
        kind = "residual-proxy"
    else:
        err = float("nan")
        kind = "unavailable"
    rows = [[args.problem, A.n, V.shape[1], args.f, method, dim,
             args.shifts or "", args.seed, kind, f"{err:.6e}"]]
    _emit(rows, ["problem", "n", "p", "f", "method", "dim", "shifts",
                 "seed", "error_kind", "error"], args.output)
    return 0


def _run_shifted(args):
    A, B = _problem_from_args(args)
    sigmas = _parse_sigma_spec(args.sigmas)
    prob = ShiftedProblem(A=A, B=B, sigmas=sigmas, tol=args.tol,
                          m=args.m, max_cycles=args.max_cycles)
    sol = solve_restarted(prob, method=args.method)
    rows = [["result", f"{s:.10g}", sol.cycles_to_converge[s],
             f"{sol.residual_norms[s]:.6e}", int(sol.converged[s])]
            for s in sol.sigmas]
    if args.history:
        rows += [["history", f"{s:.10g}", c, f"{r:.6e}", ""]
                 for (c, s, r) in sol.history]
    _emit(rows, ["kind", "sigma", "cycle", "residual_norm", "converged"],
          args.output)
    return 0 if sol.all_converged else 3


def _run_expode(args):
    block = args.block or "pde-sines"
    A, V = _problem_from_args(args, block=block,
                              p=(3 if block == "pde-sines" else args.p))
    spectrum = estimate_spectrum(A)
    rows = []
    status = 0
    for t in args.t:
        U, rep = exp_action_adaptive(A, V, t, args.tol,
                                     itermax=args.itermax,
                                     spectrum=spectrum)
        rows.append([args.problem, A.n, f"{t:.10g}",
                     rep.subspace_dimension,
                     f"{rep.residual_history[-1]:.6e}",
                     int(rep.converged)])
        if not rep.converged:
            status = 3
    _emit(rows, ["problem", "n", "t", "dim", "residual", "converged"],
          args.output)
    return status


def _bench_table1(args):
    A, B = build_problem("cfdd-L1", n0=50, p=5, seed=args.seed)
    sigmas = list(np.linspace(-5.0, 0.0, 20))
    rows = []
    for method in ("gera", "gea", "sga"):
        for m in (10, 20):
            prob = ShiftedProblem(A=A, B=B, sigmas=sigmas, tol=2e-12,
                                  m=m, max_cycles=200)
            sol = solve_restarted(prob, method=method)
            rows.append(["table1", "cfdd-L1", A.n, method, m,
                         max(sol.cycles_to_converge.values()),
                         int(sol.all_converged)])
    return rows, ["table", "matrix", "n", "method", "m", "cycles",
                  "converged"]


def _bench_table4(args):
    n0 = args.n0 or 100
    A, V = build_problem("cfdd-L3", n0=n0, block="pde-sines", p=3)
    spectrum = estimate_spectrum(A)
    rows = []
    for t in (0.1, 1.0 / 3.0, 2.0 / 3.0, 1.0):
        U, rep = exp_action_adaptive(A, V, t, 5e-9, itermax=60,
                                     spectrum=spectrum)
        rows.append(["table4", f"cfdd-L3 n0={n0}", A.n, f"{t:.6g}",
                     rep.subspace_dimension,
                     f"{rep.residual_history[-1]:.6e}",
                     int(rep.converged)])
    return rows, ["table", "matrix", "n", "t", "dim", "residual",
                  "converged"]


def _bench_table56(args, table):
    n = 1000
    if table == "5":
        A, V = build_problem("toeplitz", n=n, p=5, seed=args.seed)
        label = "toeplitz"
    else:
        A, V = build_problem("blockdiag", n=n, p=5, seed=args.seed)
        label = "blockdiag"
    normV = frob_norm(V)
    rows = []
    gera_data = gera_build(A, V, [-0.1 * (i + 1) for i in range(10)])
    ra_data = baselines.ra_build(A, V, [-0.05 * (i + 1) for i in range(20)])
    sga_data = baselines.sga_build(A, V, 20)
    for fname in ("sqrt", "log", "exp-neg-sqrt"):
        f = MatFunSpec.parse(fname)
        exact = dense_fAV(A, f, V)
        nrm = np.linalg.norm(exact)
        basis, pd = gera_data
        err_g = np.linalg.norm(exact - approx_fAV(basis, pd, f, normV)) / nrm
        blocks, T, _ = ra_data
        err_r = np.linalg.norm(
            exact - baselines.project_fAV(blocks, T, f, normV)) / nrm
        blocks, H, _ = sga_data
        k = H.shape[1]
        err_s = np.linalg.norm(
            exact - baselines.project_fAV(blocks, H[:k, :k], f, normV)) / nrm
        rows.append([f"table{table}", label, n, fname,
                     f"{err_g:.6e}", f"{err_r:.6e}", f"{err_s:.6e}"])
    return rows, ["table", "matrix", "n", "f", "err_gera", "err_ra",
                  "err_sga"]


def _run_bench(args):
    if args.table == "1":
        rows, header = _bench_table1(args)
    elif args.table == "4":
        rows, header = _bench_table4(args)
    elif args.table in ("5", "6"):
        rows, header = _bench_table56(args, args.table)
    else:
        raise ValueError(f"unknown table {args.table!r}")
    _emit(rows, header, args.output)
    return 0


def _add_problem_args(p, need_sigma=False):
    p.add_argument("--problem", required=True,
                   choices=["cfdd-L1", "cfdd-L2", "cfdd-L3", "toeplitz",
                            "blockdiag", "matrix-market"])
    p.add_argument("--n0", type=int, help="inner grid points per direction "
                   "(cfdd sources; n = n0^2)")
    p.add_argument("--n", type=int, help="order (toeplitz/blockdiag)")
    p.add_argument("--p", type=int, default=5, help="block width")
    p.add_argument("--block", choices=["random-uniform", "pde-sines",
                                       "unit"], default=None)
    p.add_argument("--mm-path", help="path to a .mtx file")
    p.add_argument("--toeplitz-variant", choices=["printed", "classic"],
                   default="classic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="CSV output path (default stdout)")


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="gera",
        description="Matrix-function actions and shifted systems via the "
                    "global extended-rational Arnoldi process")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matfun", help="approximate f(A)V")
    _add_problem_args(p)
    p.add_argument("--f", required=True,
                   help="sqrt | log | exp-neg-sqrt | exp:t | resolvent:s")
    p.add_argument("--method", default="gera",
                   choices=["gera", "gea", "ra", "sga"])
    p.add_argument("--dim", type=int, help="subspace dimension")
    p.add_argument("--shifts", help="pole spec: linear:a:k or list:v1,v2")
    p.set_defaults(func=_run_matfun)

    p = sub.add_parser("shifted", help="solve (A - sigma I) X = B over "
                                       "many sigma")
    _add_problem_args(p)
    p.add_argument("--sigmas", required=True,
                   help="uniform:a:b:k or list:v1,v2,...")
    p.add_argument("--m", type=int, default=10, help="outer steps per cycle")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-cycles", type=int, default=100)
    p.add_argument("--method", default="gera",
                   choices=["gera", "gea", "sga"])
    p.add_argument("--history", action="store_true",
                   help="append per-cycle history rows")
    p.set_defaults(func=_run_shifted)

    p = sub.add_parser("expode", help="adaptive exp(-tA)V")
    _add_problem_args(p)
    p.add_argument("--t", type=float, action="append", required=True,
                   help="time value (repeatable)")
    p.add_argument("--tol", type=float, default=5e-9)
    p.add_argument("--itermax", type=int, default=60)
    p.set_defaults(func=_run_expode)

    p = sub.add_parser("bench", help="reproduce a benchmark table")
    p.add_argument("--table", required=True, choices=["1", "4", "5", "6"])
    p.add_argument("--n0", type=int, help="table 4 grid override")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--output")
    p.set_defaults(func=_run_bench)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
