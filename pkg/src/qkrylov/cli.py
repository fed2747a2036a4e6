"""Command-line experiment harness.

Every subcommand writes CSV (header row first, floats in ``%.17e``) to
``--out`` or stdout.  All randomness flows from ``--seed``, so equal
arguments give byte-identical output.

Exit status: 0 when every solve reached its tolerance, 2 when one stopped on
its iteration limit, 1 on any error.
"""
import argparse
import io
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from . import problems
from .blockops import load_block_matrix
from .errors import MaxIterExceeded, QKrylovError
from .krylov_quad import restarted_quad_solve
from .krylov_std import restarted_solve
from .multigrid import GridHierarchy, SmootherSpec, mg_solve
from .ranges import sample_w, sample_w2

log = logging.getLogger("qkrylov")

METHODS = ("fom", "gmres", "qfom", "qqgmres", "interp")
MG_GRID = (("gmres", 1), ("gmres", 5), ("qfom", 1), ("qfom", 2))
EXIT_OK, EXIT_ERROR, EXIT_MAXITER = 0, 1, 2


def _fmt(v):
    return f"{float(v):.17e}"


@dataclass
class ExperimentConfig:
    problem: str
    params: dict = field(default_factory=dict)
    methods: tuple = METHODS
    m: int = 50
    tol: float = 1e-8
    maxrestarts: int = 10
    seed: int = 0
    record: str = "cycle"
    out: str | None = None

    def __post_init__(self):
        self.problem = self.problem.lower()
        if self.problem not in ("hainlust", "schwinger", "file", "extreme"):
            raise ValueError(f"unknown problem {self.problem!r}")
        self.methods = tuple(m.lower() for m in self.methods)
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}")
        if self.m < 1 or self.maxrestarts < 1 or not self.tol > 0:
            raise ValueError("need restart >= 1, maxrestarts >= 1 and tol > 0")
        if self.record not in ("cycle", "iter"):
            raise ValueError(f"record must be 'cycle' or 'iter', got {self.record!r}")


def build_problem(cfg):
    """The operator described by ``cfg.problem`` and ``cfg.params``."""
    p = cfg.params
    if cfg.problem == "hainlust":
        return problems.hain_lust(int(p.get("N", 1023)))
    if cfg.problem == "schwinger":
        N = int(p.get("N", 16))
        if p.get("gauge_file"):
            gauge = problems.read_gauge(p["gauge_file"])
        else:
            gauge = problems.gauge_random(N, seed=cfg.seed)
        return problems.schwinger(N, float(p.get("m0", 0.0)), gauge)
    if cfg.problem == "extreme":
        return problems.extreme_w2(int(p.get("n1", 4)), int(p.get("n2", 4)),
                                   complex(p.get("l1", 1.0)), complex(p.get("l2", -1.0)),
                                   which=p.get("which", "upper"), seed=cfg.seed)
    return load_block_matrix(p["matrix"], int(p["n1"]))


def _solve(A, b, method, cfg):
    if method in ("fom", "gmres"):
        return restarted_solve(A, b, m=cfg.m, tol=cfg.tol, maxrestarts=cfg.maxrestarts,
                               method=method, record=cfg.record)
    return restarted_quad_solve(A, b, m=cfg.m, tol=cfg.tol, maxrestarts=cfg.maxrestarts,
                                method=method, record=cfg.record, seed=cfg.seed)


def run_convergence_study(cfg, A=None):
    """Solve ``A x = A e`` (``e`` all ones, ``x0 = 0``) with each method.

    Returns ``(csv_text, reports)``.  Rows are ``cycle,method,relres`` (one
    per cycle end) or, with ``record="iter"``, ``cycle,iter,method,relres``.
    """
    A = build_problem(cfg) if A is None else A
    b = A.matvec(np.ones(A.n, dtype=complex))
    buf = io.StringIO()
    iter_mode = cfg.record == "iter"
    buf.write("cycle,iter,method,relres\n" if iter_mode else "cycle,method,relres\n")
    reports = {}
    for method in cfg.methods:
        _, rep = _solve(A, b, method, cfg)
        reports[method] = rep
        if iter_mode:
            for j, (c, r) in enumerate(zip(rep.cycle_of, rep.relres_history), start=1):
                buf.write(f"{c},{j},{rep.method},{_fmt(r)}\n")
        else:
            for c, r in zip(rep.cycle_of, rep.relres_history):
                buf.write(f"{c},{rep.method},{_fmt(r)}\n")
    return buf.getvalue(), reports


def _mg_rhs(A):
    return A.matvec(np.ones(A.n, dtype=complex))


def run_mg_study(N, tol=1e-12, maxiter=60, seed=0, grid=MG_GRID):
    """Per-cycle multigrid residuals for each ``(smoother, nu)``; rows ``cycle,smoother,nu,relres``.

    Returns ``(csv_text, {(kind, nu): (converged, report)})``.
    """
    hier = GridHierarchy.build(N)
    b = _mg_rhs(hier.operator())
    buf = io.StringIO()
    buf.write("cycle,smoother,nu,relres\n")
    out = {}
    for kind, nu in grid:
        spec = SmootherSpec(kind, nu)
        try:
            _, rep = mg_solve(hier, b, spec, tol=tol, maxiter=maxiter, seed=seed)
            ok = True
        except MaxIterExceeded as exc:
            rep, ok = exc.report, False
        out[(kind, nu)] = (ok, rep)
        for c, r in zip(rep.cycle_of, rep.relres_history):
            buf.write(f"{c},{spec.kind.value},{nu},{_fmt(r)}\n")
    return buf.getvalue(), out


def run_mg_scan(sizes, smoother, tol=1e-12, maxiter=60, seed=0):
    """Rows ``N,iterations`` (``-1`` when ``maxiter`` is hit)."""
    buf = io.StringIO()
    buf.write("N,iterations\n")
    counts = {}
    for N in sizes:
        hier = GridHierarchy.build(N)
        try:
            _, rep = mg_solve(hier, _mg_rhs(hier.operator()), smoother, tol=tol,
                              maxiter=maxiter, seed=seed)
            counts[N] = rep.restarts
        except MaxIterExceeded:
            counts[N] = -1
        buf.write(f"{N},{counts[N]}\n")
    return buf.getvalue(), counts


def run_range(cfg, kind="w2", samples=10_000, polish=0, A=None):
    """Sampled range points as rows ``re,im,kind``."""
    A = build_problem(cfg) if A is None else A
    if kind == "w":
        s = sample_w(A, samples, cfg.seed, polish=polish)
    else:
        s = sample_w2(A, samples, cfg.seed, polish=polish)
    buf = io.StringIO()
    buf.write("re,im,kind\n")
    for z in s.points:
        buf.write(f"{_fmt(z.real)},{_fmt(z.imag)},{s.kind}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--tol", type=float, default=None, help="relative residual tolerance")
    p.add_argument("--restart", type=int, default=50, help="restart length m (default 50)")
    p.add_argument("--maxrestarts", type=int, default=10, help="maximum cycles (default 10)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _add_methods(p):
    p.add_argument("--method", action="append", choices=METHODS,
                   help="method to run (repeatable; default all five)")
    p.add_argument("--record", choices=("cycle", "iter"), default="cycle")


def _add_problem_params(p, schwinger_seed=True):
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--m0", type=float, default=None)
    p.add_argument("--gauge-file", default=None)
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--n2", type=int, default=None)
    p.add_argument("--l1", type=complex, default=None)
    p.add_argument("--l2", type=complex, default=None)
    p.add_argument("--which", choices=("upper", "lower"), default="upper")


def make_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="qkrylov", parents=[common],
                                     description="Quadratic-range Krylov experiments (CSV output).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve a problem with restarted methods")
    p.add_argument("--problem", choices=("hainlust", "schwinger", "extreme", "file"), default=None)
    p.add_argument("--matrix", default=None, help="Matrix Market file (implies --problem file)")
    _add_methods(p)
    _add_problem_params(p)

    p = sub.add_parser("range", parents=[common], help="sample W(A) or W^2(A)")
    p.add_argument("--problem", choices=("hainlust", "schwinger", "extreme", "file"), default=None)
    p.add_argument("--matrix", default=None)
    p.add_argument("--kind", choices=("w", "w2"), default="w2")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--polish", type=int, default=0,
                   help="refine this many extreme draws by local search")
    _add_problem_params(p)

    p = sub.add_parser("hainlust", parents=[common], help="convergence study, Hain-Lust operator")
    p.add_argument("--N", type=int, default=1023)
    _add_methods(p)

    p = sub.add_parser("schwinger", parents=[common], help="convergence study, Schwinger model")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--m0", type=float, default=None,
                   help="bare mass (default: -0.5 times the measured smallest Laplacian eigenvalue)")
    p.add_argument("--gauge-file", default=None)
    _add_methods(p)

    p = sub.add_parser("extreme", parents=[common], help="convergence study, one- or two-point W^2")
    p.add_argument("--n1", type=int, default=4)
    p.add_argument("--n2", type=int, default=4)
    p.add_argument("--l1", type=complex, default=1.0)
    p.add_argument("--l2", type=complex, default=-1.0)
    p.add_argument("--which", choices=("upper", "lower"), default="upper")
    _add_methods(p)

    p = sub.add_parser("multigrid", parents=[common], help="V-cycle multigrid, Hain-Lust")
    p.add_argument("--N", type=int, default=1023)
    p.add_argument("--smoother", choices=("qfom", "gmres"), default="qfom")
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--maxiter", type=int, default=60)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--scan", action="store_true",
                      help="emit N,iterations for N = 63, 127, ... up to --N")
    mode.add_argument("--study", action="store_true",
                      help="all of GMRES nu=1,5 and QFOM nu=1,2 at --N")
    return parser


def _params(args):
    keys = ("N", "m0", "gauge_file", "n1", "n2", "l1", "l2", "which", "matrix")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _config(args, problem, default_tol=1e-8):
    methods = tuple(args.method) if getattr(args, "method", None) else METHODS
    return ExperimentConfig(problem=problem, params=_params(args), methods=methods,
                            m=args.restart, tol=args.tol if args.tol is not None else default_tol,
                            maxrestarts=args.maxrestarts, seed=args.seed,
                            record=getattr(args, "record", "cycle"), out=args.out)


def _problem_name(args):
    if args.matrix:
        if args.n1 is None:
            raise ValueError("--matrix needs --n1 (the block split)")
        return "file"
    return args.problem or "hainlust"


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _status(reports):
    return EXIT_OK if all(r.converged for r in reports.values()) else EXIT_MAXITER


def _run(args):
    cmd = args.command
    if cmd in ("solve", "hainlust", "extreme"):
        cfg = _config(args, _problem_name(args) if cmd == "solve" else cmd)
        text, reports = run_convergence_study(cfg)
        _emit(text, args.out)
        return _status(reports)
    if cmd == "schwinger":
        if args.m0 is None:
            gauge = (problems.read_gauge(args.gauge_file) if args.gauge_file
                     else problems.gauge_random(args.N, seed=args.seed))
            args.m0 = -0.5 * problems.gauge_laplace_min(gauge)
            log.info("m0 = %.6g (half the measured gap)", args.m0)
        cfg = _config(args, "schwinger")
        text, reports = run_convergence_study(cfg)
        _emit(text, args.out)
        return _status(reports)
    if cmd == "range":
        cfg = _config(args, _problem_name(args))
        _emit(run_range(cfg, args.kind, args.samples, args.polish), args.out)
        return EXIT_OK
    if cmd == "multigrid":
        tol = args.tol if args.tol is not None else 1e-12
        spec = SmootherSpec(args.smoother, args.nu)
        if args.scan:
            sizes = [n for n in (63, 127, 255, 511, 1023, 2047, 4095, 8191, 16383) if n <= args.N]
            text, counts = run_mg_scan(sizes, spec, tol, args.maxiter, args.seed)
            _emit(text, args.out)
            return EXIT_OK if min(counts.values()) > 0 else EXIT_MAXITER
        if args.study:
            text, out = run_mg_study(args.N, tol, args.maxiter, args.seed)
            _emit(text, args.out)
            return EXIT_OK if all(ok for ok, _ in out.values()) else EXIT_MAXITER
        hier = GridHierarchy.build(args.N)
        status = EXIT_OK
        try:
            _, rep = mg_solve(hier, _mg_rhs(hier.operator()), spec, tol, args.maxiter, args.seed)
        except MaxIterExceeded as exc:
            rep, status = exc.report, EXIT_MAXITER
        rows = "".join(f"{c},{_fmt(r)}\n" for c, r in zip(rep.cycle_of, rep.relres_history))
        _emit("cycle,relres\n" + rows, args.out)
        return status
    raise ValueError(f"unknown command {cmd!r}")


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (QKrylovError, ValueError, OSError) as exc:
        print(f"qkrylov: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
