"""Model problems: discretised Hain-Lust operator, Schwinger lattice operator,
and block matrices whose quadratic numerical range is one or two points."""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .blockops import BlockOperator
from .errors import BadDimensions, NoStrip, ParseError


# ---------------------------------------------------------------------------
# Hain-Lust
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HainLustParams:
    N: int

    @property
    def h(self):
        return 1.0 / (self.N + 1)


def alpha_min(h):
    """Smallest eigenvalue ``(2 - 2 cos(pi h)) / h^2`` of the scaled Dirichlet Laplacian."""
    return (2.0 - 2.0 * np.cos(np.pi * h)) / h**2


def alpha_max(h):
    return (2.0 + 2.0 * np.cos(np.pi * h)) / h**2


def hain_lust_q(N):
    """Diagonal of ``Q = -3 I + 2 diag(exp(2 pi i h j))``, ``j = 1..N``."""
    h = 1.0 / (N + 1)
    j = np.arange(1, N + 1)
    return -3.0 + 2.0 * np.exp(2j * np.pi * h * j)


def hain_lust(N):
    """Discretised Hain-Lust operator ``[[L/h^2, I], [I, Q]]`` on ``C^{2N}``, matrix free."""
    if N < 1:
        raise BadDimensions("N must be >= 1")
    params = HainLustParams(int(N))
    scale = 1.0 / params.h**2
    q = hain_lust_q(params.N)

    def a11(X):
        return kernels.laplace1d(X, scale)

    def ident(X):
        return X.copy()

    def a22(X):
        return q[:, None] * X

    def a22h(X):
        return q.conj()[:, None] * X

    op = BlockOperator((N, N), a11, ident, ident, a22, name=f"hain-lust N={N}",
                       adjoints={(0, 0): a11, (0, 1): ident, (1, 0): ident, (1, 1): a22h})
    op.params = params
    return op


def strip_for_alpha(amin, a=-0.25, b=None):
    """A strip ``a < Re z < b`` free of ``W^2`` given the smallest Laplacian eigenvalue.

    Any ``lambda`` in the strip has distance ``> amin - b`` from ``W(L/h^2)``
    and ``> a + 1`` from ``W(Q)``; it cannot lie in ``W^2`` once
    ``(a + 1)(amin - b) > 1``.
    """
    if amin <= 2.0:
        raise NoStrip(f"alpha_min = {amin:.4g} <= 2: no certified strip around 0")
    if b is None:
        b = min(1.0, amin - 2.0) / 2.0
    if not (-0.5 < a < 0.0 < b < amin - 2.0):
        raise NoStrip(f"strip ({a}, {b}) outside the admissible range")
    assert (a + 1.0) * (amin - b) > 1.0
    return a, b


def hain_lust_strip(N):
    """Certified ``W^2``-free strip ``(a, b)`` around the origin for the Hain-Lust matrix."""
    return strip_for_alpha(alpha_min(1.0 / (N + 1)))


# ---------------------------------------------------------------------------
# Schwinger model
# ---------------------------------------------------------------------------

@dataclass
class GaugeField:
    """Unimodular link variables ``U_x, U_y`` on an ``N x N`` periodic lattice."""

    N: int
    ux: np.ndarray
    uy: np.ndarray
    seed: int | None = None
    source: str = "Random"
    meta: dict = field(default_factory=dict)


def gauge_random(N, seed=0, mixing=1.0):
    """Links ``exp(i * mixing * theta)``, ``theta ~ U[0, 2 pi)``; ``mixing=0`` gives the cold field."""
    if N < 2:
        raise BadDimensions("lattice extent must be >= 2")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(2, N, N))
    u = np.exp(1j * mixing * theta)
    return GaugeField(int(N), np.ascontiguousarray(u[0]), np.ascontiguousarray(u[1]), seed=seed,
                      source="Random", meta={"mixing": mixing})


def write_gauge(gauge, path):
    """Plain text: first line ``N``, then ``x y dir re im`` per link (``dir`` 0 = x, 1 = y)."""
    lines = [str(gauge.N)]
    for d, u in enumerate((gauge.ux, gauge.uy)):
        for x in range(gauge.N):
            for y in range(gauge.N):
                z = u[x, y]
                lines.append(f"{x} {y} {d} {z.real:.17e} {z.imag:.17e}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_gauge(path):
    text = Path(path).read_text().split("\n")
    try:
        N = int(text[0].strip())
        u = np.full((2, N, N), np.nan + 0j)
        for line in text[1:]:
            if not line.strip():
                continue
            x, y, d, re, im = line.split()
            u[int(d), int(x), int(y)] = float(re) + 1j * float(im)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed gauge file {path}: {exc}") from exc
    if np.isnan(u).any():
        raise ParseError(f"gauge file {path} does not define every link")
    if np.max(np.abs(np.abs(u) - 1.0)) > 1e-12:
        raise ParseError(f"gauge file {path} has non-unimodular links")
    return GaugeField(N, np.ascontiguousarray(u[0]), np.ascontiguousarray(u[1]), source="File",
                      meta={"path": str(path)})


def schwinger(N, m0, gauge):
    """Hermitian indefinite Schwinger operator ``Q = [[A, B], [B^*, -A]]`` on ``C^{2 N^2}``.

    ``A = A0 + m0 I`` is the gauge Laplacian, ``B`` the covariant central
    difference with the Pauli phases; unknowns are ordered by spin, sites by
    ``x * N + y``, boundaries periodic.
    """
    if gauge.N != N:
        raise BadDimensions(f"gauge extent {gauge.N} != N = {N}")
    ux, uy = gauge.ux, gauge.uy
    diag = m0 + 2.0

    def a(X):
        return kernels.schwinger_a(X, ux, uy, diag)

    def b(X):
        return kernels.schwinger_b(X, ux, uy)

    def bh(X):
        return -kernels.schwinger_b(X, ux, uy)

    def minus_a(X):
        return -kernels.schwinger_a(X, ux, uy, diag)

    n = N * N
    op = BlockOperator((n, n), a, b, bh, minus_a, name=f"schwinger N={N} m0={m0}",
                       hermitian=True)
    op.params = {"N": N, "m0": m0}
    op.gauge = gauge
    return op


def gauge_laplace_dense(gauge):
    """Dense ``A0`` (the gauge Laplacian without mass shift); desk scale only."""
    n = gauge.N**2
    return kernels.schwinger_a(np.eye(n, dtype=complex), gauge.ux, gauge.uy, 2.0)


def gauge_laplace_min(gauge):
    """Smallest eigenvalue of ``A0``, by dense Hermitian eigensolve."""
    A0 = gauge_laplace_dense(gauge)
    A0 = 0.5 * (A0 + A0.conj().T)
    return float(np.linalg.eigvalsh(A0)[0])


def schwinger_gap(a0_min, m0):
    """``m0 + alpha_min(A0)``; positive means no ``W^2(Q)`` point has ``|Re z|`` below it."""
    return m0 + a0_min


# ---------------------------------------------------------------------------
# Extreme W^2
# ---------------------------------------------------------------------------

def extreme_w2(n1, n2, lambda1, lambda2, offblock=None, which="upper", seed=0):
    """``[[l1 I, C], [0, l2 I]]`` (``which="upper"``) or ``[[l1 I, 0], [C, l2 I]]``.

    ``W^2`` of such a matrix is exactly ``{l1, l2}``.  ``offblock`` defaults to a
    seeded random complex matrix of the right shape.
    """
    if n1 < 2 or n2 < 2:
        raise BadDimensions("extreme W^2 construction needs n1, n2 >= 2")
    which = which.lower()
    if which in ("upper", "upperright"):
        shape = (n1, n2)
    elif which in ("lower", "lowerleft"):
        shape = (n2, n1)
    else:
        raise ValueError(f"which must be 'upper' or 'lower', got {which!r}")
    if offblock is None:
        rng = np.random.default_rng(seed)
        offblock = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    C = np.asarray(offblock, dtype=complex)
    if C.shape != shape:
        raise BadDimensions(f"offblock shape {C.shape} != {shape}")
    a11 = lambda1 * np.eye(n1, dtype=complex)
    a22 = lambda2 * np.eye(n2, dtype=complex)
    if shape == (n1, n2):
        op = BlockOperator((n1, n2), a11, C, None, a22, name="extreme-w2 upper")
    else:
        op = BlockOperator((n1, n2), a11, None, C, a22, name="extreme-w2 lower")
    op.params = {"lambda1": lambda1, "lambda2": lambda2, "which": which}
    return op
