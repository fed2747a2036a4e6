"""Two-level orthogonal Arnoldi, QFOM, QQGMRES and interpolated QQGMRES.

The two-level process never forms the Arnoldi basis ``V`` directly.  It keeps
orthonormal bases ``V1, V2`` of the two block projections of the Krylov space
together with upper triangular couplings ``R1, R2`` such that
``V = [V1 R1; V2 R2]`` and ``R1^* R1 + R2^* R2 = I``.  The products
``W_ij = A_ij V_j`` and projections ``Z_ij = V_i^* A_ij V_j`` are cached, so
the product-space model ``blockdiag(V1, V2)^* A blockdiag(V1, V2)`` is
available at every step for one application of each block.

Conventions: ``k`` counts completed steps.  After ``k`` steps ``V_i`` holds
``min(k+1, n_i)`` columns; the iteration-``k`` model uses the first
``min(k, n_i)`` of them.  A block whose new direction vanishes gets a seeded
random replacement direction (its ``eta_i`` is recorded as 0), so the block
dimension grows by one per step until it reaches ``n_i``.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .blockops import BlockVector
from .errors import GradeReached, KrylovStop, RankDeficientWarning, SingularModel, ZeroRightHandSide
from .krylov_std import (
    DEFLATION_TOL,
    SINGULAR_COND,
    SolveReport,
    Termination,
    _cond,
    _flat,
    _like,
    cgs2,
    hessenberg_lstsq,
)

log = logging.getLogger(__name__)

#: column-pivoted QR treats |R_jj| <= RANK_TOL * |R_00| as rank deficiency
RANK_TOL = 1e-13


class TwoLevelState:
    """Mutable state of the two-level orthogonal Arnoldi process (see module docstring)."""

    def __init__(self, structure, b, capacity, rng):
        self.structure = structure
        n1, n2 = structure.sizes()
        self.sizes = (n1, n2)
        self.capacity = int(capacity)
        cap = self.capacity
        vcols = [min(cap + 1, n) for n in self.sizes]
        wcols = [min(cap, n) for n in self.sizes]
        self._V = [np.zeros((n, c), dtype=complex, order="F") for n, c in zip(self.sizes, vcols)]
        self._R = [np.zeros((c, cap + 1), dtype=complex) for c in vcols]
        self._Hu = np.zeros((cap + 1, cap), dtype=complex)
        self._Hiu = [np.zeros((c, cap), dtype=complex) for c in vcols]
        self._W = {(i, j): np.zeros((self.sizes[i], wcols[j]), dtype=complex, order="F")
                   for i in range(2) for j in range(2)}
        self._Z = {(i, j): np.zeros((vcols[i], wcols[j]), dtype=complex)
                   for i in range(2) for j in range(2)}
        self.d = [0, 0]        # columns currently in V_i
        self.nw = [0, 0]       # columns currently in W_ij (same for both i)
        self.k = 0
        self.rng = rng
        self.b = b             # the start vector (residual of the cycle)
        self.bnorms = (0.0, 0.0)
        self.beta = 0.0
        self.eta_flags = []    # per step: (replaced_1, replaced_2)
        self.exhausted = [False, False]
        self.events = []
        self.matvecs = 0       # counted in applications of the full operator
        self.grade_reached = False

    # -- views --------------------------------------------------------------
    def dims(self, k):
        """``(d_1, d_2)`` for iteration ``k``."""
        return tuple(min(k, n) for n in self.sizes)

    def V(self, i, k=None):
        k = self.k + 1 if k is None else k
        return self._V[i][:, : min(k, self.d[i])]

    def R(self, i, k=None):
        """``R_i^(k)`` of shape ``d_i^(k) x k``; default ``k`` is the current ``k+1`` (or ``k`` after grade)."""
        if k is None:
            k = self.k if self.grade_reached else self.k + 1
        return self._R[i][: self.dims(k)[i], :k]

    @property
    def Hu(self):
        return self._Hu[: self.k + 1, : self.k]

    def Hiu(self, i):
        return self._Hiu[i][: self.d[i], : self.k]

    def W(self, i, j, k=None):
        k = self.k if k is None else k
        return self._W[(i, j)][:, : self.dims(k)[j]]

    def Z(self, i, j, rows, cols):
        return self._Z[(i, j)][:rows, :cols]

    def standard_basis(self, k=None):
        """``[V1 R1; V2 R2]``: the standard Arnoldi basis ``V^(k)`` recovered from the blocks."""
        k = (self.k if self.grade_reached else self.k + 1) if k is None else k
        d = self.dims(k)
        return np.concatenate([self._V[0][:, : d[0]] @ self._R[0][: d[0], :k],
                               self._V[1][:, : d[1]] @ self._R[1][: d[1], :k]], axis=0)

    def sum_r_defect(self):
        """``||R1^* R1 + R2^* R2 - I||_F`` for the current triangular factors."""
        R1, R2 = self.R(0), self.R(1)
        G = R1.conj().T @ R1 + R2.conj().T @ R2
        return float(np.linalg.norm(G - np.eye(G.shape[0])))

    @property
    def replacements(self):
        return sum(a + b for a, b in self.eta_flags)


def _random_unit(rng, n, V=None):
    """Seeded random unit vector, orthonormalised against ``V`` if given."""
    for _ in range(8):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        scale = np.linalg.norm(z)
        if V is not None and V.shape[1]:
            _, z, nz = cgs2(V, z)
        else:
            nz = np.linalg.norm(z)
        if nz > 1e-8 * scale:
            return z / nz
    raise RuntimeError("could not draw a direction outside the current basis")


def two_level_init(A, b, capacity, seed=0):
    """Start the two-level process from ``b`` (the initial residual).

    ``beta = ||b||``, ``rho_i = ||b_i|| / beta`` and ``v_i = b_i / ||b_i||``;
    a zero block gets ``rho_i = 0`` and a seeded random unit vector.
    """
    bf = _flat(b)
    structure = A.structure
    if bf.shape[0] != structure.n:
        raise ValueError("right-hand side does not match the operator")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    st = TwoLevelState(structure, bf, capacity, rng)
    b1, b2 = bf[: structure.n1], bf[structure.n1:]
    nb = (float(np.linalg.norm(b1)), float(np.linalg.norm(b2)))
    beta = float(np.hypot(*nb))
    if beta == 0.0:
        raise ZeroRightHandSide("two-level Arnoldi needs b != 0")
    st.beta = beta
    st.bnorms = nb
    for i, bi in enumerate((b1, b2)):
        if nb[i] > 0.0:
            st._V[i][:, 0] = bi / nb[i]
            st._R[i][0, 0] = nb[i] / beta
        else:
            st._V[i][:, 0] = _random_unit(rng, structure.sizes()[i])
            st._R[i][0, 0] = 0.0
            st.events.append(f"init: block {i + 1} of b is zero, random start vector")
        st.d[i] = 1
    return st


def breakdown_policy(state, i, k):
    """Replacement direction for block ``i`` whose new direction vanished at step ``k``.

    Returns a unit vector orthogonal to the current ``V_i`` drawn from the
    state's generator, or ``None`` if ``V_i`` already spans ``C^{n_i}``.
    """
    d = state.d[i]
    if d >= state.sizes[i]:
        return None
    return _random_unit(state.rng, state.sizes[i], state._V[i][:, :d])


def two_level_step(state, A):
    """One iteration of the two-level orthogonal Arnoldi process.

    Performs one application of each nonzero block.  Raises
    :class:`GradeReached` when ``eta^(k)`` vanishes (the Krylov space is
    invariant) or when both block bases already span their whole spaces; in
    both cases the iteration-``k`` model is complete and usable.
    """
    if state.grade_reached:
        raise GradeReached("Krylov space already exhausted")
    k = state.k + 1
    if k > state.capacity:
        raise IndexError("two-level capacity exhausted")
    dk = state.dims(k)
    n = state.sizes

    # (1) new block products and projections
    applied = False
    for j in range(2):
        if state.nw[j] < dk[j]:
            col = dk[j] - 1
            vj = state._V[j][:, col]
            for i in range(2):
                w = A.block_apply(i, j, vj)
                state._W[(i, j)][:, col] = w
                state._Z[(i, j)][: dk[i], col] = state._V[i][:, : dk[i]].conj().T @ w
            state.nw[j] += 1
            applied = True
    if applied:
        state.matvecs += 1

    # (2) orthogonalise each block of A v^(k) against V_i
    h_blk, eta_blk, scales, newcol, flags = [], [], [], [], [False, False]
    Rk = [state._R[j][: dk[j], k - 1] for j in range(2)]
    for i in range(2):
        vt = state._W[(i, 0)][:, : dk[0]] @ Rk[0] + state._W[(i, 1)][:, : dk[1]] @ Rk[1]
        scale = float(np.linalg.norm(vt))
        h_i, w, eta_i = cgs2(state._V[i][:, : dk[i]], vt)
        v_new = None
        if dk[i] >= n[i]:
            if not state.exhausted[i]:
                state.exhausted[i] = True
                msg = f"step {k}: block {i + 1} basis spans C^{n[i]}, no further growth"
                log.debug(msg)
                state.events.append(msg)
            eta_i = 0.0
        elif eta_i <= DEFLATION_TOL * scale:
            v_new = breakdown_policy(state, i, k)
            flags[i] = True
            eta_i = 0.0
            state.events.append(f"step {k}: block {i + 1} near breakdown, random replacement")
        else:
            v_new = w / eta_i
        state._Hiu[i][: dk[i], k - 1] = h_i
        if v_new is not None:
            state._Hiu[i][dk[i], k - 1] = eta_i
            state._V[i][:, dk[i]] = v_new
            # (7) new row of Z_ij
            for j in range(2):
                state._Z[(i, j)][dk[i], : state.nw[j]] = v_new.conj() @ state._W[(i, j)][:, : state.nw[j]]
            state.d[i] += 1
        h_blk.append(h_i)
        eta_blk.append(eta_i)
        scales.append(scale)
        newcol.append(v_new is not None)
    state.eta_flags.append(tuple(flags))

    # (3)-(5) global Hessenberg column
    Rold = [state._R[i][: dk[i], :k] for i in range(2)]
    h = Rold[0].conj().T @ h_blk[0] + Rold[1].conj().T @ h_blk[1]
    rt = [h_blk[i] - Rold[i] @ h for i in range(2)]
    # second pass on the coefficients keeps R1*R1 + R2*R2 = I over long runs
    c = Rold[0].conj().T @ rt[0] + Rold[1].conj().T @ rt[1]
    rt = [rt[i] - Rold[i] @ c for i in range(2)]
    h = h + c
    eta = float(np.sqrt(np.vdot(rt[0], rt[0]).real + eta_blk[0] ** 2
                        + np.vdot(rt[1], rt[1]).real + eta_blk[1] ** 2))
    state._Hu[:k, k - 1] = h
    state._Hu[k, k - 1] = eta
    state.k = k
    if all(flags) and eta > DEFLATION_TOL * np.hypot(*scales):
        msg = f"step {k}: both block directions degenerate while eta={eta:.3e} (serious breakdown)"
        log.info(msg)
        state.events.append(msg)

    if eta <= DEFLATION_TOL * float(np.hypot(*scales)):
        state.grade_reached = True
        raise GradeReached(f"grade reached at k={k} (eta={eta:.3e})")

    # (6) new column of R_i
    for i in range(2):
        state._R[i][: dk[i], k] = rt[i] / eta
        if newcol[i]:
            state._R[i][dk[i], k] = eta_blk[i] / eta
    if dk[0] >= n[0] and dk[1] >= n[1]:
        state.grade_reached = True
        raise GradeReached(f"product space spans C^{sum(n)} at k={k}")
    return state


@dataclass
class QuadModel:
    """Reduced product-space models at iteration ``k``.

    ``Hx`` is ``(d1+d2) x (d1+d2)``; ``Hxu`` has one extra row per block
    whose basis grew; ``bx``/``bxu`` are the projected start vectors.
    """

    k: int
    d: tuple
    du: tuple
    Hx: np.ndarray
    Hxu: np.ndarray
    bx: np.ndarray
    bxu: np.ndarray


def build_quad_model(state, k=None):
    k = state.k if k is None else k
    if k < 1:
        raise ValueError("need at least one two-level step")
    d = state.dims(k)
    du = tuple(min(k + 1, state.d[i]) for i in range(2))
    Z = state._Z
    Hx = np.block([[Z[(0, 0)][: d[0], : d[0]], Z[(0, 1)][: d[0], : d[1]]],
                   [Z[(1, 0)][: d[1], : d[0]], Z[(1, 1)][: d[1], : d[1]]]])
    Hxu = np.block([[Z[(0, 0)][: du[0], : d[0]], Z[(0, 1)][: du[0], : d[1]]],
                    [Z[(1, 0)][: du[1], : d[0]], Z[(1, 1)][: du[1], : d[1]]]])
    bx = np.zeros(d[0] + d[1], dtype=complex)
    bx[0], bx[d[0]] = state.bnorms
    bxu = np.zeros(du[0] + du[1], dtype=complex)
    bxu[0], bxu[du[0]] = state.bnorms
    return QuadModel(k, d, du, Hx, Hxu, bx, bxu)


def lift(state, y, d):
    """``blockdiag(V1, V2) y`` for coefficient vector ``y`` split at ``d[0]``."""
    return np.concatenate([state._V[0][:, : d[0]] @ y[: d[0]], state._V[1][:, : d[1]] @ y[d[0]:]])


def apply_lifted(state, y, d):
    """``A blockdiag(V1, V2) y`` from the cached products, no matvec."""
    y1, y2 = y[: d[0]], y[d[0]:]
    W = state._W
    return np.concatenate([W[(0, 0)][:, : d[0]] @ y1 + W[(0, 1)][:, : d[1]] @ y2,
                           W[(1, 0)][:, : d[0]] @ y1 + W[(1, 1)][:, : d[1]] @ y2])


def qfom_coefficients(model):
    c = _cond(model.Hx)
    if c > SINGULAR_COND:
        raise SingularModel(f"H_x^({model.k}) is singular (cond={c:.2e})", cond=c)
    return sla.lu_solve(sla.lu_factor(model.Hx), model.bx)


def qfom_iterate(model, state, x0):
    """QFOM iterate ``x0 + V_x H_x^{-1} b_x``.

    Raises
    ------
    SingularModel
        ``H_x`` is numerically singular; the QFOM iterate does not exist.
    """
    y = qfom_coefficients(model)
    return _like(x0, _flat(x0) + lift(state, y, model.d), state.structure)


def _pivoted_lstsq(M, rhs):
    """Least squares by column-pivoted QR; minimum-norm solution when rank deficient."""
    if M.shape[1] == 0:
        return np.zeros(0, dtype=complex), False
    Q, R, piv = sla.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag[0] > 0 else 0
    if rank < M.shape[1]:
        z = np.linalg.lstsq(M, rhs, rcond=None)[0]
        return z, True
    z = np.empty(M.shape[1], dtype=complex)
    z[piv] = sla.solve_triangular(R, Q.conj().T @ rhs)
    return z, False


def qqgmres_coefficients(model):
    z, deficient = _pivoted_lstsq(model.Hxu, model.bxu)
    if deficient:
        warnings.warn(f"QQGMRES model at k={model.k} is rank deficient; minimum-norm solution used",
                      RankDeficientWarning, stacklevel=3)
    return z, deficient


def qqgmres_iterate(model, state, x0):
    """QQGMRES iterate: minimise the projection of the residual onto the next product space."""
    z, _ = qqgmres_coefficients(model)
    return _like(x0, _flat(x0) + lift(state, z, model.d), state.structure)


def qgmres_reference(A, state, b, x0, k=None):
    """True product-space minimal-residual iterate (testing oracle; costs ``O(n)`` per column).

    ``A V_x`` is recomputed from scratch, independent of the cached products.
    """
    k = state.k if k is None else k
    d = state.dims(k)
    V1, V2 = state._V[0][:, : d[0]], state._V[1][:, : d[1]]
    AV = np.concatenate([
        np.concatenate([A.block_apply(0, 0, V1), A.block_apply(0, 1, V2)], axis=1),
        np.concatenate([A.block_apply(1, 0, V1), A.block_apply(1, 1, V2)], axis=1),
    ], axis=0)
    r0 = _flat(b) - A.matvec(_flat(x0))
    eta = np.linalg.lstsq(AV, r0, rcond=None)[0]
    return _like(x0, _flat(x0) + lift(state, eta, d), state.structure)


def gmres_from_two_level(state, k=None):
    """GMRES coefficients ``xi`` from the embedded global Hessenberg ``Hu``."""
    k = state.k if k is None else k
    rhs = np.zeros(k + 1, dtype=complex)
    rhs[0] = state.beta
    return hessenberg_lstsq(state._Hu[: k + 1, :k], rhs)


def gmres_update_two_level(state, xi, k=None):
    """Return ``(V^(k) xi, A V^(k) xi)`` with ``V^(k) = [V1 R1; V2 R2]``, no matvec."""
    k = state.k if k is None else k
    d = state.dims(k)
    c = [state._R[i][: d[i], :k] @ xi for i in range(2)]
    dx = np.concatenate([state._V[0][:, : d[0]] @ c[0], state._V[1][:, : d[1]] @ c[1]])
    y = np.concatenate(c)
    return dx, apply_lifted(state, y, d)


class Interpolation(NamedTuple):
    alpha: float
    x: object
    rnorm: float
    degenerate: bool


def interpolate_optimal(x_g, x_q, r_g, r_q, tol=1e-14):
    """Residual-minimising combination ``alpha x_g + (1 - alpha) x_q``.

    ``r_g`` and ``r_q`` must be the residuals ``b - A x_g`` and ``b - A x_q``.
    When ``r_g`` and ``r_q`` coincide to ``tol`` the problem is degenerate and
    ``x_g`` is returned with ``alpha = 1``.
    """
    rg, rq = _flat(r_g), _flat(r_q)
    ng2 = float(np.vdot(rg, rg).real)
    nq2 = float(np.vdot(rq, rq).real)
    diff = rg - rq
    nd2 = float(np.vdot(diff, diff).real)
    if np.sqrt(nd2) <= tol * max(np.sqrt(ng2), np.sqrt(nq2)) or nd2 == 0.0:
        return Interpolation(1.0, x_g, float(np.sqrt(ng2)), True)
    re = float(np.vdot(rg, rq).real)
    alpha = (nq2 - re) / nd2
    rn2 = max((ng2 * nq2 - re * re) / nd2, 0.0)
    if isinstance(x_g, BlockVector):
        x = x_g * alpha + x_q * (1.0 - alpha)
    else:
        x = alpha * np.asarray(x_g) + (1.0 - alpha) * np.asarray(x_q)
    return Interpolation(alpha, x, float(np.sqrt(rn2)), False)


def _cycle_correction(state, method, report):
    """Coefficients at the cycle end; returns ``(dx, A dx)`` using cached products."""
    k = state.k
    if method == "qfom":
        for kk in range(k, 0, -1):
            model = build_quad_model(state, kk)
            try:
                y = qfom_coefficients(model)
            except SingularModel as exc:
                msg = f"cycle {report.restarts}: {exc}"
                log.info(msg)
                report.events.append(msg)
                continue
            return lift(state, y, model.d), apply_lifted(state, y, model.d)
        raise SingularModel("no QFOM iterate exists in this cycle")
    model = build_quad_model(state, k)
    z, deficient = qqgmres_coefficients(model)
    if deficient:
        report.events.append(f"cycle {report.restarts}: QQGMRES rank deficient")
    dq, Adq = lift(state, z, model.d), apply_lifted(state, z, model.d)
    if method == "qqgmres":
        return dq, Adq
    xi, _ = gmres_from_two_level(state, k)
    dg, Adg = gmres_update_two_level(state, xi, k)
    r = state.b
    itp = interpolate_optimal(dg, dq, r - Adg, r - Adq)
    report.companions.setdefault("GMRES", []).append(float(np.linalg.norm(r - Adg)))
    report.companions.setdefault("QQGMRES", []).append(float(np.linalg.norm(r - Adq)))
    return itp.x, itp.alpha * Adg + (1.0 - itp.alpha) * Adq


def _iter_relres(state, method):
    """Residual norm of the current-iteration iterate, from cached products."""
    k = state.k
    model = build_quad_model(state, k)
    r = state.b
    if method == "qfom":
        try:
            y = qfom_coefficients(model)
        except SingularModel:
            return np.inf
        return float(np.linalg.norm(r - apply_lifted(state, y, model.d)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        z, _ = qqgmres_coefficients(model)
    rq = r - apply_lifted(state, z, model.d)
    if method == "qqgmres":
        return float(np.linalg.norm(rq))
    xi, _ = gmres_from_two_level(state, k)
    _, Adg = gmres_update_two_level(state, xi, k)
    return interpolate_optimal(0.0, 0.0, r - Adg, rq).rnorm


def restarted_quad_solve(A, b, x0=None, m=50, tol=1e-8, maxrestarts=100, method="qfom",
                         record="cycle", seed=0):
    """Restarted QFOM, QQGMRES, or interpolated QQGMRES (``"interp"``).

    The restart vector of each cycle is the residual of the method's own
    cycle-end iterate (the interpolated one for ``"interp"``).  Arguments as
    for :func:`qkrylov.krylov_std.restarted_solve`; ``seed`` drives the
    random replacement directions.
    """
    method = method.lower()
    if method not in ("qfom", "qqgmres", "interp"):
        raise ValueError(f"unknown method {method!r}")
    if tol <= 0 or m < 1:
        raise ValueError("need tol > 0 and m >= 1")
    bf = _flat(b)
    x = np.zeros_like(bf) if x0 is None else _flat(x0).copy()
    label = {"qfom": "QFOM", "qqgmres": "QQGMRES", "interp": "INTERP"}[method]
    report = SolveReport(method=label, record=record)
    r = bf - A.matvec(x)
    report.matvecs += 1
    r0norm = float(np.linalg.norm(r))
    if r0norm == 0.0:
        report.relres_history.append(0.0)
        report.cycle_of.append(0)
        report.converged = True
        report.termination = Termination.TOLERANCE
        return _like(b, x, A.structure), report

    ss = np.random.SeedSequence(seed)
    rnorm = r0norm
    for cycle in range(1, maxrestarts + 1):
        report.restarts = cycle
        rng = np.random.default_rng(ss.spawn(1)[0])
        state = two_level_init(A, r, m, seed=rng)
        for _ in range(m):
            stop = None
            try:
                two_level_step(state, A)
            except KrylovStop as exc:
                stop = exc
            if record == "iter":
                res = _iter_relres(state, method)
                report.relres_history.append(res / r0norm)
                report.cycle_of.append(cycle)
                if res <= tol * r0norm:
                    break
            if stop is not None:
                break
        report.matvecs += state.matvecs
        report.events.extend(state.events)
        try:
            dx, _ = _cycle_correction(state, method, report)
        except SingularModel as exc:
            report.events.append(str(exc))
            report.termination = Termination.SINGULAR_MODEL
            report.relres_history.append(rnorm / r0norm)
            report.cycle_of.append(cycle)
            return _like(b, x, A.structure), report
        x = x + dx
        r = bf - A.matvec(x)
        report.matvecs += 1
        rnorm = float(np.linalg.norm(r))
        for hist in report.companions.values():
            hist[-1] /= r0norm
        report.relres_history.append(rnorm / r0norm)
        report.cycle_of.append(cycle)
        if rnorm <= tol * r0norm:
            report.converged = True
            report.termination = Termination.TOLERANCE
            break
    return _like(b, x, A.structure), report
