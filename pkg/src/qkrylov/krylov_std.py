"""Standard Arnoldi process, FOM, restarted GMRES and the GMRES rank-1 model.

These are the baselines the quadratic methods are compared against.  The
Arnoldi process orthogonalises with classical Gram-Schmidt plus one full
reorthogonalisation pass (CGS2).
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .blockops import BlockVector
from .errors import HappyBreakdown, KrylovStop, SingularModel

log = logging.getLogger(__name__)

#: happy breakdown when eta <= DEFLATION_TOL * ||A v_k||
DEFLATION_TOL = 1e-12
#: a projected model matrix with 2-norm condition above this is treated as singular
SINGULAR_COND = 1e14


class Termination(str, enum.Enum):
    TOLERANCE = "Tolerance"
    MAXITER = "MaxIter"
    BREAKDOWN = "Breakdown"
    SINGULAR_MODEL = "SingularModel"


@dataclass
class SolveReport:
    """History and outcome of a (restarted) solve.

    ``relres_history[j]`` is ``||b - A x|| / ||b - A x0||``; in ``cycle``
    mode one entry per restart cycle, in ``iter`` mode one per inner
    iteration (``cycle_of[j]`` then says which cycle it belongs to).
    ``companions`` maps a method label to per-cycle relative residuals of
    iterates built from the same cycle's basis but not used for the restart
    (the interpolated solver records its GMRES and QQGMRES ingredients).
    """

    method: str
    relres_history: list = field(default_factory=list)
    cycle_of: list = field(default_factory=list)
    matvecs: int = 0
    restarts: int = 0
    converged: bool = False
    termination: Termination = Termination.MAXITER
    record: str = "cycle"
    events: list = field(default_factory=list)
    companions: dict = field(default_factory=dict)

    @property
    def final_relres(self):
        return self.relres_history[-1] if self.relres_history else float("nan")


def _flat(x):
    if isinstance(x, BlockVector):
        return x.flat()
    return np.asarray(x, dtype=complex).ravel()


def _like(template, x, structure):
    if isinstance(template, BlockVector):
        return BlockVector.from_flat(x, structure)
    return x


def cgs2(V, w):
    """Orthogonalise ``w`` against the orthonormal columns of ``V`` (two CGS passes).

    Returns ``(h, w_perp, eta)`` with ``w = V h + w_perp`` and ``eta = ||w_perp||``.
    """
    if V.shape[1] == 0:
        return np.zeros(0, dtype=complex), w, float(np.linalg.norm(w))
    h = V.conj().T @ w
    w = w - V @ h
    h2 = V.conj().T @ w
    w = w - V @ h2
    return h + h2, w, float(np.linalg.norm(w))


class ArnoldiState:
    """Orthonormal Krylov basis and extended Hessenberg matrix.

    Storage is preallocated for ``capacity`` steps.  After ``k`` steps,
    ``V`` is ``n x (k+1)`` and ``Hu`` is ``(k+1) x k`` with
    ``A V[:, :k] = V Hu``.
    """

    def __init__(self, r0, capacity):
        r0 = np.asarray(r0, dtype=complex).ravel()
        n = r0.shape[0]
        self.n = n
        self.capacity = int(capacity)
        self.beta = float(np.linalg.norm(r0))
        if self.beta == 0.0:
            raise ValueError("Arnoldi process needs a nonzero start vector")
        self._V = np.zeros((n, self.capacity + 1), dtype=complex, order="F")
        self._H = np.zeros((self.capacity + 1, self.capacity), dtype=complex)
        self._V[:, 0] = r0 / self.beta
        self.k = 0
        self.breakdown = False
        self.matvecs = 0

    @property
    def V(self):
        return self._V[:, : self.k + (0 if self.breakdown else 1)]

    @property
    def Hu(self):
        return self._H[: self.k + 1, : self.k]

    @property
    def H(self):
        return self._H[: self.k, : self.k]


def arnoldi_init(r0, capacity):
    return ArnoldiState(r0, capacity)


def arnoldi_step(state, A):
    """Extend the Arnoldi basis by one vector.

    Raises
    ------
    HappyBreakdown
        The new subdiagonal entry vanished (relative to ``||A v_k||``): the
        Krylov space is invariant.  The state stays valid with ``k``
        incremented and ``state.breakdown`` set.
    """
    if state.breakdown:
        raise HappyBreakdown("Krylov space already invariant")
    k = state.k
    if k >= state.capacity:
        raise IndexError("Arnoldi capacity exhausted")
    w = A.matvec(state._V[:, k])
    state.matvecs += 1
    scale = np.linalg.norm(w)
    h, w, eta = cgs2(state._V[:, : k + 1], w)
    state._H[: k + 1, k] = h
    state._H[k + 1, k] = eta
    state.k = k + 1
    if eta <= DEFLATION_TOL * scale or k + 1 >= state.n:
        state.breakdown = True
        raise HappyBreakdown(f"happy breakdown at k={k + 1} (eta={eta:.3e})")
    state._V[:, k + 1] = w / eta
    return state


def _cond(M):
    if M.size == 0:
        return np.inf
    with np.errstate(all="ignore"):
        c = np.linalg.cond(M)
    return c if np.isfinite(c) else np.inf


def fom_coefficients(state, k=None):
    k = state.k if k is None else k
    H = state._H[:k, :k]
    c = _cond(H)
    if c > SINGULAR_COND:
        raise SingularModel(f"H^({k}) is singular to working precision (cond={c:.2e})", cond=c)
    rhs = np.zeros(k, dtype=complex)
    rhs[0] = state.beta
    return sla.lu_solve(sla.lu_factor(H), rhs)


def fom_iterate(state, x0, k=None):
    """FOM iterate ``x0 + V_k H_k^{-1} (beta e1)``.

    Raises
    ------
    SingularModel
        ``H_k`` is numerically singular; the FOM iterate does not exist.
    """
    k = state.k if k is None else k
    if k < 1:
        raise ValueError("need at least one Arnoldi step")
    y = fom_coefficients(state, k)
    x = _flat(x0) + state._V[:, :k] @ y
    return _like(x0, x, getattr(x0, "structure", None))


def fom_residual_estimate(state, y, k=None):
    """``||b - A x_fom|| = h_{k+1,k} |y_k|`` from the Arnoldi relation."""
    k = state.k if k is None else k
    return abs(state._H[k, k - 1]) * abs(y[k - 1])


def hessenberg_lstsq(Hu, rhs):
    """Solve ``min ||rhs - Hu xi||`` by QR; returns ``(xi, residual_norm)``."""
    Q, R = np.linalg.qr(Hu, mode="complete")
    kk = Hu.shape[1]
    qtb = Q.conj().T @ rhs
    d = np.abs(np.diag(R[:kk, :kk]))
    if kk and d.min() > 1e-14 * max(d.max(), 1e-300):
        xi = sla.solve_triangular(R[:kk, :kk], qtb[:kk])
    else:
        xi = np.linalg.lstsq(Hu, rhs, rcond=None)[0]
        return xi, float(np.linalg.norm(rhs - Hu @ xi))
    return xi, float(np.linalg.norm(qtb[kk:]))


def gmres_coefficients(state, k=None):
    k = state.k if k is None else k
    rhs = np.zeros(k + 1, dtype=complex)
    rhs[0] = state.beta
    return hessenberg_lstsq(state._H[: k + 1, :k], rhs)


def gmres_iterate(state, x0, k=None):
    """GMRES iterate via the reduced ``(k+1) x k`` least-squares problem."""
    k = state.k if k is None else k
    if k < 1:
        raise ValueError("need at least one Arnoldi step")
    xi, _ = gmres_coefficients(state, k)
    x = _flat(x0) + state._V[:, :k] @ xi
    return _like(x0, x, getattr(x0, "structure", None))


def gmres_rank1_model(state, k=None):
    """``H_k + |h_{k+1,k}|^2 (H_k^{-*} e_k) e_k^*``; its eigenvalues are the harmonic Ritz values."""
    k = state.k if k is None else k
    H = state._H[:k, :k]
    c = _cond(H)
    if c > SINGULAR_COND:
        raise SingularModel(f"H^({k}) is singular (cond={c:.2e})", cond=c)
    ek = np.zeros(k, dtype=complex)
    ek[-1] = 1.0
    f = sla.solve(H.conj().T, ek)
    eta = state._H[k, k - 1]
    Hhat = H.copy()
    Hhat[:, -1] += abs(eta) ** 2 * f
    return Hhat


def _fom_with_fallback(state, report):
    """FOM coefficients at the largest ``k' <= k`` for which ``H^(k')`` is nonsingular."""
    for kk in range(state.k, 0, -1):
        try:
            return kk, fom_coefficients(state, kk)
        except SingularModel as exc:
            msg = f"cycle {report.restarts}: {exc}"
            log.info(msg)
            report.events.append(msg)
    raise SingularModel("no FOM iterate exists in this cycle")


def restarted_solve(A, b, x0=None, m=50, tol=1e-8, maxrestarts=100, method="gmres",
                    record="cycle"):
    """Restarted FOM or GMRES.

    Parameters
    ----------
    A : BlockOperator
    b : array_like or BlockVector
    x0 : array_like or BlockVector, optional
        Initial guess, zero by default.
    m : int
        Restart length (inner iterations per cycle).
    tol : float
        Stop once ``||b - A x|| <= tol * ||b - A x0||`` at a cycle end.
    maxrestarts : int
        Maximum number of cycles.
    method : {"fom", "gmres"}
    record : {"cycle", "iter"}
        Record relative residuals at cycle ends only, or after every inner
        iteration (FOM/GMRES recurrence estimates) plus at cycle ends.

    Returns
    -------
    x, SolveReport
    """
    method = method.lower()
    if method not in ("fom", "gmres"):
        raise ValueError(f"unknown method {method!r}")
    if tol <= 0 or m < 1:
        raise ValueError("need tol > 0 and m >= 1")
    bf = _flat(b)
    x = np.zeros_like(bf) if x0 is None else _flat(x0).copy()
    report = SolveReport(method=method.upper(), record=record)
    r = bf - A.matvec(x)
    report.matvecs += 1
    r0norm = float(np.linalg.norm(r))
    if r0norm == 0.0:
        report.relres_history.append(0.0)
        report.cycle_of.append(0)
        report.converged = True
        report.termination = Termination.TOLERANCE
        return _like(b, x, A.structure), report

    rnorm = r0norm
    for cycle in range(1, maxrestarts + 1):
        report.restarts = cycle
        state = ArnoldiState(r, min(m, A.n))
        stop = None
        for _ in range(min(m, A.n)):
            try:
                arnoldi_step(state, A)
            except KrylovStop as exc:
                stop = exc
            if record == "iter":
                k = state.k
                if method == "gmres":
                    _, res = gmres_coefficients(state, k)
                else:
                    try:
                        y = fom_coefficients(state, k)
                        res = fom_residual_estimate(state, y, k)
                    except SingularModel:
                        res = np.inf
                report.relres_history.append(res / r0norm)
                report.cycle_of.append(cycle)
                if res <= tol * r0norm:
                    break
            if stop is not None:
                break
        report.matvecs += state.matvecs
        try:
            if method == "gmres":
                xi, _ = gmres_coefficients(state)
                x = x + state._V[:, : state.k] @ xi
            else:
                kk, y = _fom_with_fallback(state, report)
                x = x + state._V[:, :kk] @ y
        except SingularModel as exc:
            report.events.append(str(exc))
            report.termination = Termination.SINGULAR_MODEL
            report.relres_history.append(rnorm / r0norm)
            report.cycle_of.append(cycle)
            return _like(b, x, A.structure), report
        r = bf - A.matvec(x)
        report.matvecs += 1
        rnorm = float(np.linalg.norm(r))
        report.relres_history.append(rnorm / r0norm)
        report.cycle_of.append(cycle)
        if rnorm <= tol * r0norm:
            report.converged = True
            report.termination = Termination.TOLERANCE
            break
        if rnorm == 0.0:
            break
    return _like(b, x, A.structure), report
