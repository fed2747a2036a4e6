"""Sampling of the numerical range W(A) and the quadratic numerical range W^2(A).

Membership is only ever approximated by sampling: every emitted point is a
genuine element of the range (a Rayleigh quotient, or an eigenvalue of an
induced 2x2 matrix), so minima over samples are upper bounds on the true
distance to the origin.

Samples are generated in fixed-size chunks whose seeds derive from
``(seed, chunk index)``, which keeps results independent of how chunks are
scheduled.

Gaussian draws concentrate in the interior of the range.  With ``polish > 0``
the most extreme draws (smallest modulus for ``W^2``, largest for ``W`` by
default) are refined by a local L-BFGS search over the unit spheres before
their points are emitted.  Polished points are still exact range elements, so
the upper-bound reading of ``min |mu|`` (and lower-bound reading of
``max |mu|``) is unchanged; the bounds just get tighter.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .blockops import BlockVector, split
from .errors import DegenerateBlock, EmptySample

CHUNK = 512


@dataclass
class RangeSample:
    points: np.ndarray
    sample_count: int
    seed: int
    kind: str = "w"


@dataclass
class GapEstimate:
    delta: float
    components_hint: int
    threshold: float


def eig2x2(alpha, beta, gamma, delta):
    """Both roots of ``(z - alpha)(z - delta) - beta * gamma = 0``.

    The larger-magnitude root comes from the discriminant with the sign that
    avoids cancellation, the companion from the product of the roots.
    Works elementwise on arrays.  Triangular inputs return ``(alpha, delta)``
    exactly.
    """
    a = np.asarray(alpha, dtype=complex)
    b = np.asarray(beta, dtype=complex)
    c = np.asarray(gamma, dtype=complex)
    d = np.asarray(delta, dtype=complex)
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    bc = b * c
    t = a + d
    disc = np.sqrt((a - d) ** 2 + 4.0 * bc)
    sgn = np.where((t.conj() * disc).real >= 0.0, 1.0, -1.0)
    big = 0.5 * (t + sgn * disc)
    det = a * d - bc
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big != 0, det / np.where(big != 0, big, 1.0), 0.0)
    tri = bc == 0
    l1 = np.where(tri, a, big)
    l2 = np.where(tri, d, small)
    if l1.ndim == 0:
        return complex(l1), complex(l2)
    return l1, l2


def _chunks(samples, seed):
    done = 0
    idx = 0
    while done < samples:
        s = min(CHUNK, samples - done)
        yield s, np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        done += s
        idx += 1


def _unit_columns(rng, n, s):
    X = rng.standard_normal((n, s)) + 1j * rng.standard_normal((n, s))
    return X / np.linalg.norm(X, axis=0)


def _quad(X, Y):
    """Column-wise ``x^* y``."""
    return np.einsum("ij,ij->j", X.conj(), Y)


def _to_real(xs):
    return np.concatenate([np.concatenate([x.real, x.imag]) for x in xs])


def _from_real(z, sizes):
    out, off = [], 0
    for n in sizes:
        out.append(z[off:off + n] + 1j * z[off + n:off + 2 * n])
        off += 2 * n
    return out


def _sphere_grad(g, x, scale):
    """Real-coordinate gradient of ``f(y / ||y||)`` from the Wirtinger-type gradient ``g`` at ``x``."""
    g = (g - x * np.real(np.vdot(x, g))) / scale
    return np.concatenate([g.real, g.imag])


class _Pool:
    """The ``size`` most extreme draws seen so far (by ``sign * score``)."""

    def __init__(self, size, sign):
        self.size = int(size)
        self.sign = sign
        self._items = []

    def offer(self, score, offset, columns):
        if self.size <= 0:
            return
        order = np.argsort(self.sign * score, kind="stable")[: self.size]
        for j in order:
            self._items.append((self.sign * score[j], offset + int(j), tuple(c[:, j].copy() for c in columns)))
        self._items.sort(key=lambda t: (t[0], t[1]))
        del self._items[self.size:]

    def items(self):
        return [(idx, cols) for _, idx, cols in sorted(self._items, key=lambda t: t[1])]


def _block_rmatvec(A, x):
    x1, x2 = split(x, A.structure)
    return np.concatenate([A.block_apply_adjoint(0, 0, x1) + A.block_apply_adjoint(1, 0, x2),
                           A.block_apply_adjoint(0, 1, x1) + A.block_apply_adjoint(1, 1, x2)])


def _check_target(target):
    if target not in ("min", "max"):
        raise ValueError(f"target must be 'min' or 'max', got {target!r}")
    return 1.0 if target == "min" else -1.0


def polish_w(mv, rmv, x, target="max", maxiter=500):
    """Locally extremise ``|<Ax, x>|`` over the unit sphere starting from ``x``.

    ``mv`` and ``rmv`` apply ``A`` and ``A^*`` to a vector.  Returns the
    refined unit vector.
    """
    sign = _check_target(target)
    n = x.shape[0]

    def fun(z):
        (y,) = _from_real(z, (n,))
        s = np.linalg.norm(y)
        u = y / s
        Au = mv(u)
        w = np.vdot(u, Au)
        g = 2.0 * (np.conj(w) * Au + w * rmv(u))
        return sign * abs(w) ** 2, sign * _sphere_grad(g, u, s)

    res = minimize(fun, _to_real([x]), jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-14})
    (y,) = _from_real(res.x, (n,))
    return y / np.linalg.norm(y)


def sample_w(A, samples, seed=0, polish=0, target="max"):
    """Rayleigh quotients ``<Ax, x>`` for unit ``x`` from normalised complex Gaussians.

    ``A`` may be a :class:`BlockOperator` or a dense square array.  The
    ``polish`` draws with the largest (``target="max"``) or smallest modulus
    are refined by :func:`polish_w` and replaced in place.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sign = _check_target(target)
    if isinstance(A, np.ndarray):
        n = A.shape[0]
        mv = lambda X: A @ X
        rmv = lambda X: A.conj().T @ X
    else:
        n = A.n
        mv = A.matvec
        rmv = lambda X: _block_rmatvec(A, X)
    pts, pool = [], _Pool(polish, sign)
    offset = 0
    for s, rng in _chunks(samples, seed):
        X = _unit_columns(rng, n, s)
        w = _quad(X, mv(X))
        pts.append(w)
        pool.offer(np.abs(w), offset, (X,))
        offset += s
    points = np.concatenate(pts)
    for idx, (x,) in pool.items():
        u = polish_w(mv, rmv, x, target=target)
        points[idx] = np.vdot(u, mv(u))
    return RangeSample(points, int(samples), seed, kind="w")


def w2_matrices(A, X1, X2):
    """Entries ``(alpha, beta, gamma, delta)`` of the induced 2x2 matrices for unit columns."""
    alpha = _quad(X1, A.block_apply(0, 0, X1))
    beta = _quad(X1, A.block_apply(0, 1, X2))
    gamma = _quad(X2, A.block_apply(1, 0, X1))
    delta = _quad(X2, A.block_apply(1, 1, X2))
    return alpha, beta, gamma, delta


def _w2_objective(z, A, sizes, sign):
    """``sign * |mu|^2`` for the smaller-modulus (``sign=1``) or larger-modulus root, and its gradient."""
    ys = _from_real(z, sizes)
    scales = [np.linalg.norm(y) for y in ys]
    xs = [y / s for y, s in zip(ys, scales)]
    Ax = {(i, j): A.block_apply(i, j, xs[j]) for i in range(2) for j in range(2)}
    M = np.array([[np.vdot(xs[i], Ax[(i, j)]) for j in range(2)] for i in range(2)])
    w, VR = np.linalg.eig(M)
    k = int(np.argmin(sign * np.abs(w)))
    mu, r = w[k], VR[:, k]
    wl, VL = np.linalg.eig(M.conj().T)
    l = VL[:, int(np.argmin(np.abs(wl - np.conj(mu))))]
    lr = np.vdot(l, r)
    f = sign * abs(mu) ** 2
    if abs(lr) < 1e-12:
        # defective 2x2 matrix: mu is not differentiable here
        return f, np.zeros_like(z)
    c = np.conj(mu) / lr
    grads = []
    for i in range(2):
        u = np.conj(l[i]) * (r[0] * Ax[(i, 0)] + r[1] * Ax[(i, 1)])
        p = np.conj(r[i]) * (l[0] * A.block_apply_adjoint(0, i, xs[0])
                             + l[1] * A.block_apply_adjoint(1, i, xs[1]))
        g = 2.0 * (c * u + np.conj(c) * p)
        grads.append(_sphere_grad(sign * g, xs[i], scales[i]))
    return f, np.concatenate(grads)


def polish_w2(A, x1, x2, target="min", maxiter=500):
    """Locally extremise the modulus of one root of the induced 2x2 matrix.

    ``target="min"`` drives the smaller-modulus root towards the origin,
    ``"max"`` pushes the larger one outwards.  Uses the block adjoints of
    ``A``; returns the refined unit pair ``(x1, x2)``.
    """
    sign = _check_target(target)
    sizes = A.structure.sizes()
    res = minimize(_w2_objective, _to_real([x1, x2]), args=(A, sizes, sign), jac=True,
                   method="L-BFGS-B", options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-14})
    y1, y2 = _from_real(res.x, sizes)
    return y1 / np.linalg.norm(y1), y2 / np.linalg.norm(y2)


def sample_w2(A, samples, seed=0, polish=0, target="min"):
    """Points of ``W^2(A)``: both eigenvalues of ``[[x1*A11x1, x1*A12x2], [x2*A21x1, x2*A22x2]]``.

    Returns ``2 * samples`` points; entries ``2j`` and ``2j+1`` belong to draw ``j``.
    The ``polish`` draws whose nearer (``target="min"``) or farther root is
    most extreme are refined by :func:`polish_w2` and replaced in place.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sign = _check_target(target)
    n1, n2 = A.structure.sizes()
    pts, pool = [], _Pool(polish, sign)
    offset = 0
    for s, rng in _chunks(samples, seed):
        X1 = _unit_columns(rng, n1, s)
        X2 = _unit_columns(rng, n2, s)
        l1, l2 = eig2x2(*w2_matrices(A, X1, X2))
        pts.append(np.stack([l1, l2], axis=1).ravel())
        mods = np.abs(np.stack([l1, l2]))
        score = mods.min(axis=0) if sign > 0 else mods.max(axis=0)
        pool.offer(score, offset, (X1, X2))
        offset += s
    points = np.concatenate(pts)
    for idx, (x1, x2) in pool.items():
        u1, u2 = polish_w2(A, x1, x2, target=target)
        l1, l2 = eig2x2(*(z[0] for z in w2_matrices(A, u1[:, None], u2[:, None])))
        points[2 * idx], points[2 * idx + 1] = l1, l2
    return RangeSample(points, int(samples), seed, kind="w2")


def gap_estimate(sample, threshold_frac=0.1):
    """Distance of the sampled points to 0 and a two-component hint.

    The hint is 2 when consecutive sorted real parts ``lo < 0 < hi`` leave an
    empty interval wider than ``threshold_frac`` times the real-axis span.
    """
    pts = np.asarray(sample.points if isinstance(sample, RangeSample) else sample)
    if pts.size == 0:
        raise EmptySample("no sampled points")
    delta = float(np.min(np.abs(pts)))
    re = np.sort(pts.real)
    span = re[-1] - re[0]
    threshold = threshold_frac * span
    hint = 1
    if re[0] < 0.0 < re[-1]:
        i = np.searchsorted(re, 0.0)
        lo, hi = re[i - 1], re[i]
        if lo < 0.0 < hi and hi - lo > threshold:
            hint = 2
    return GapEstimate(delta, hint, float(threshold))


def enclosure_witness(A, lam, v, rel_tol=1e-12):
    """2x2 matrix from the normalised blocks of an eigenvector ``v``; ``lam`` is one of its eigenvalues.

    Raises
    ------
    DegenerateBlock
        One block of ``v`` vanishes.
    """
    if isinstance(v, BlockVector):
        v1, v2 = v.x1, v.x2
    else:
        v1, v2 = split(np.asarray(v, dtype=complex), A.structure)
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    scale = np.hypot(n1, n2)
    if n1 <= rel_tol * scale or n2 <= rel_tol * scale:
        raise DegenerateBlock("eigenvector has a vanishing block")
    x1 = (v1 / n1)[:, None]
    x2 = (v2 / n2)[:, None]
    a, b, c, d = (z[0] for z in w2_matrices(A, x1, x2))
    return np.array([[a, b], [c, d]])
