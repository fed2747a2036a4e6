"""Geometric multigrid V-cycles for the Hain-Lust family.

Levels are nested uniform grids with ``N + 1`` a power of two; every level
is a fresh discretisation (:func:`qkrylov.problems.hain_lust`), not a
Galerkin product.  Both blocks live on the same 1-D grid, so transfers act
blockwise with the linear-interpolation stencil.  The coarsest level,
``N = 7``, is solved directly.

The coarse right-hand side is ``restrict(r) / 2``.  ``restrict`` is the
exact adjoint of ``prolongate``, and with that pairing the Galerkin product
``R A_h P`` approximates ``2 A_2h`` for every block (the stencil weights of
``R`` sum to 2).  Dividing by two makes the rediscretised coarse operator
consistent with the Galerkin one.
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import kernels
from .blockops import BlockVector
from .errors import BadLevels, KrylovStop, MaxIterExceeded, SingularModel
from .krylov_quad import build_quad_model, lift, qfom_coefficients, two_level_init, two_level_step
from .krylov_std import (ArnoldiState, SolveReport, Termination, arnoldi_step,
                         gmres_coefficients)
from .problems import hain_lust

log = logging.getLogger(__name__)

COARSEST_N = 7
#: restricted residuals are scaled by this factor before the coarse solve
COARSE_SCALE = 0.5


class SmootherKind(str, enum.Enum):
    QFOM = "QFOM"
    GMRES = "GMRES"


@dataclass(frozen=True)
class SmootherSpec:
    kind: SmootherKind
    nu: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", SmootherKind(str(self.kind).upper()
                                                      if not isinstance(self.kind, SmootherKind)
                                                      else self.kind))
        if int(self.nu) < 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")
        object.__setattr__(self, "nu", int(self.nu))

    def label(self):
        return f"{self.kind.value} nu={self.nu}"


def _is_pow2(m):
    return m >= 1 and m & (m - 1) == 0


def _check_levels(N_fine, N_coarse):
    if N_fine + 1 != 2 * (N_coarse + 1):
        raise BadLevels(f"N_fine + 1 = {N_fine + 1} is not 2 (N_coarse + 1) = {2 * (N_coarse + 1)}")


def _blocks(v, N):
    if isinstance(v, BlockVector):
        x1, x2 = v.x1, v.x2
    else:
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != 2 * N:
            raise BadLevels(f"vector of length {v.shape[0]} does not live on level N={N}")
        x1, x2 = v[:N], v[N:]
    if x1.shape[0] != N or x2.shape[0] != N:
        raise BadLevels(f"blocks of sizes {x1.shape[0]}, {x2.shape[0]} do not live on level N={N}")
    return x1, x2


def _transfer(op, v, N_in):
    x1, x2 = _blocks(v, N_in)
    X = np.ascontiguousarray(np.stack([x1, x2], axis=1).astype(complex))
    Y = op(X)
    return Y[:, 0], Y[:, 1]


def prolongate(coarse, N_coarse, N_fine):
    """Linear interpolation of both blocks from level ``N_coarse`` to ``N_fine``.

    Accepts a :class:`BlockVector` or a flat array and returns the same kind.
    """
    _check_levels(N_fine, N_coarse)
    y1, y2 = _transfer(kernels.prolong1d, coarse, N_coarse)
    if isinstance(coarse, BlockVector):
        return BlockVector(y1, y2)
    return np.concatenate([y1, y2])


def restrict(fine, N_fine, N_coarse):
    """Adjoint of :func:`prolongate` in the Euclidean inner product."""
    _check_levels(N_fine, N_coarse)
    y1, y2 = _transfer(kernels.restrict1d, fine, N_fine)
    if isinstance(fine, BlockVector):
        return BlockVector(y1, y2)
    return np.concatenate([y1, y2])


@dataclass
class GridHierarchy:
    """Hain-Lust operators from ``N`` down to ``N = 7``, finest first."""

    levels: list
    coarse_lu: tuple = field(repr=False, default=None)

    @classmethod
    def build(cls, N):
        if N < COARSEST_N or not _is_pow2(N + 1):
            raise BadLevels(f"N + 1 must be a power of two with N >= {COARSEST_N}, got N={N}")
        levels = []
        n = N
        while True:
            levels.append((n, hain_lust(n)))
            if n == COARSEST_N:
                break
            n = (n + 1) // 2 - 1
        dense = levels[-1][1].to_dense()
        return cls(levels, sla.lu_factor(dense))

    @property
    def N(self):
        return self.levels[0][0]

    @property
    def depth(self):
        return len(self.levels)

    def operator(self, level=0):
        return self.levels[level][1]


def smooth(A, b, x, spec, rng):
    """``nu`` steps of QFOM or GMRES from a fresh Krylov space on the current residual.

    A singular QFOM model skips the correction for this visit.
    """
    r = b - A.matvec(x)
    if not np.any(r):
        return x
    if spec.kind is SmootherKind.QFOM:
        state = two_level_init(A, r, spec.nu, seed=rng)
        for _ in range(spec.nu):
            try:
                two_level_step(state, A)
            except KrylovStop:
                break
        model = build_quad_model(state)
        try:
            y = qfom_coefficients(model)
        except SingularModel as exc:
            log.info("QFOM smoother skipped: %s", exc)
            return x
        return x + lift(state, y, model.d)
    state = ArnoldiState(r, min(spec.nu, A.n))
    for _ in range(min(spec.nu, A.n)):
        try:
            arnoldi_step(state, A)
        except KrylovStop:
            break
    xi, _ = gmres_coefficients(state)
    return x + state._V[:, : state.k] @ xi


def _vcycle(hier, level, b, x, spec, rng):
    N, A = hier.levels[level]
    if level == hier.depth - 1:
        return sla.lu_solve(hier.coarse_lu, b)
    x = smooth(A, b, x, spec, rng)
    r = b - A.matvec(x)
    Nc = hier.levels[level + 1][0]
    rc = COARSE_SCALE * restrict(r, N, Nc)
    ec = _vcycle(hier, level + 1, rc, np.zeros_like(rc), spec, rng)
    return x + prolongate(ec, Nc, N)


def vcycle(hier, level, b, x, smoother, rng=None):
    """One V-cycle with pre-smoothing only, starting at ``level`` (0 = finest).

    ``b`` and ``x`` are flat arrays or :class:`BlockVector` s of that level.
    """
    if not 0 <= level < hier.depth:
        raise BadLevels(f"level {level} outside 0..{hier.depth - 1}")
    N = hier.levels[level][0]
    bf = np.concatenate(_blocks(b, N)).astype(complex)
    xf = np.concatenate(_blocks(x, N)).astype(complex)
    rng = rng if rng is not None else np.random.default_rng(0)
    out = _vcycle(hier, level, bf, xf, smoother, rng)
    if isinstance(b, BlockVector):
        return BlockVector(out[:N], out[N:])
    return out


def mg_solve(hier, b, smoother, tol=1e-12, maxiter=100, seed=0):
    """V-cycles from ``x = 0`` until ``||b - A x|| <= tol ||b||``.

    Returns
    -------
    x, SolveReport
        ``report.restarts`` is the number of V-cycles.

    Raises
    ------
    MaxIterExceeded
        ``maxiter`` cycles did not reach ``tol``; the exception carries the
        last iterate and the report.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = hier.operator(0)
    N = hier.N
    bf = np.concatenate(_blocks(b, N)).astype(complex)
    bnorm = float(np.linalg.norm(bf))
    report = SolveReport(method=f"MG[{smoother.label()}]")
    x = np.zeros_like(bf)
    wrap = (lambda v: BlockVector(v[:N], v[N:])) if isinstance(b, BlockVector) else (lambda v: v)
    if bnorm == 0.0:
        report.converged = True
        report.termination = Termination.TOLERANCE
        report.relres_history.append(0.0)
        report.cycle_of.append(0)
        return wrap(x), report
    rng = np.random.default_rng(seed)
    for it in range(1, maxiter + 1):
        x = _vcycle(hier, 0, bf, x, smoother, rng)
        rel = float(np.linalg.norm(bf - A.matvec(x))) / bnorm
        report.relres_history.append(rel)
        report.cycle_of.append(it)
        report.restarts = it
        if rel <= tol:
            report.converged = True
            report.termination = Termination.TOLERANCE
            return wrap(x), report
    raise MaxIterExceeded(f"multigrid did not reach tol={tol:g} in {maxiter} V-cycles "
                          f"(relres {report.final_relres:.3e})", x=wrap(x), report=report)
