"""Stencil kernels: 1-D Dirichlet Laplacian, Schwinger hopping blocks, grid transfer.

Every kernel acts on a 2-D complex array whose columns are independent
vectors, so sampling code can push thousands of probes through one call.
Each kernel exists twice: a loop version (``*_loop``) compiled by numba when
available, and a vectorised numpy version (``*_np``).  The public name is bound
to the loop version when numba is active, to the numpy version otherwise.
"""
import numpy as np

from ._accel import NUMBA_AVAILABLE, njit


# ---------------------------------------------------------------------------
# 1-D Laplacian tridiag(-1, 2, -1) * scale, homogeneous Dirichlet boundary
# ---------------------------------------------------------------------------

def laplace1d_np(x, scale):
    y = 2.0 * x
    y[1:] -= x[:-1]
    y[:-1] -= x[1:]
    y *= scale
    return y


@njit
def laplace1d_loop(x, scale):
    n, s = x.shape
    y = np.empty_like(x)
    for j in range(n):
        for c in range(s):
            v = 2.0 * x[j, c]
            if j > 0:
                v -= x[j - 1, c]
            if j < n - 1:
                v -= x[j + 1, c]
            y[j, c] = scale * v
    return y


# ---------------------------------------------------------------------------
# Schwinger blocks on an N x N periodic lattice, site index x*N + y
# ---------------------------------------------------------------------------

def schwinger_a_np(psi, ux, uy, diag):
    n = ux.shape[0]
    s = psi.shape[1]
    p = psi.reshape(n, n, s)
    uxe = ux[:, :, None]
    uye = uy[:, :, None]
    fwd = uxe * np.roll(p, -1, axis=0) + uye * np.roll(p, -1, axis=1)
    bwd = (np.roll(np.conj(uxe) * p, 1, axis=0)
           + np.roll(np.conj(uye) * p, 1, axis=1))
    out = diag * p - 0.5 * (fwd + bwd)
    return out.reshape(n * n, s)


def schwinger_b_np(psi, ux, uy):
    n = ux.shape[0]
    s = psi.shape[1]
    p = psi.reshape(n, n, s)
    uxe = ux[:, :, None]
    uye = uy[:, :, None]
    fwd = uxe * np.roll(p, -1, axis=0) + 1j * uye * np.roll(p, -1, axis=1)
    bwd = (np.roll(np.conj(uxe) * p, 1, axis=0)
           - 1j * np.roll(np.conj(uye) * p, 1, axis=1))
    out = -0.5 * fwd + 0.5 * bwd
    return out.reshape(n * n, s)


@njit
def schwinger_a_loop(psi, ux, uy, diag):
    n = ux.shape[0]
    s = psi.shape[1]
    out = np.empty_like(psi)
    for x in range(n):
        xp = (x + 1) % n
        xm = (x - 1) % n
        for y in range(n):
            yp = (y + 1) % n
            ym = (y - 1) % n
            i = x * n + y
            ixp = xp * n + y
            ixm = xm * n + y
            iyp = x * n + yp
            iym = x * n + ym
            a_xp = ux[x, y]
            a_yp = uy[x, y]
            a_xm = np.conj(ux[xm, y])
            a_ym = np.conj(uy[x, ym])
            for c in range(s):
                hop = (a_xp * psi[ixp, c] + a_yp * psi[iyp, c]
                       + a_xm * psi[ixm, c] + a_ym * psi[iym, c])
                out[i, c] = diag * psi[i, c] - 0.5 * hop
    return out


@njit
def schwinger_b_loop(psi, ux, uy):
    n = ux.shape[0]
    s = psi.shape[1]
    out = np.empty_like(psi)
    for x in range(n):
        xp = (x + 1) % n
        xm = (x - 1) % n
        for y in range(n):
            yp = (y + 1) % n
            ym = (y - 1) % n
            i = x * n + y
            ixp = xp * n + y
            ixm = xm * n + y
            iyp = x * n + yp
            iym = x * n + ym
            a_xp = ux[x, y]
            a_yp = 1j * uy[x, y]
            a_xm = np.conj(ux[xm, y])
            a_ym = -1j * np.conj(uy[x, ym])
            for c in range(s):
                out[i, c] = 0.5 * (a_xm * psi[ixm, c] + a_ym * psi[iym, c]
                                   - a_xp * psi[ixp, c] - a_yp * psi[iyp, c])
    return out


# ---------------------------------------------------------------------------
# Linear interpolation between nested 1-D grids, N_f + 1 = 2 (N_c + 1)
# ---------------------------------------------------------------------------

def prolong1d_np(c):
    nc, s = c.shape
    f = np.zeros((2 * nc + 1, s), dtype=c.dtype)
    f[1::2] = c
    f[2:-1:2] = 0.5 * (c[:-1] + c[1:])
    f[0] = 0.5 * c[0]
    f[-1] = 0.5 * c[-1]
    return f


def restrict1d_np(f):
    nf, s = f.shape
    return f[1::2] + 0.5 * (f[0:-1:2] + f[2::2])


@njit
def prolong1d_loop(c):
    nc, s = c.shape
    f = np.zeros((2 * nc + 1, s), dtype=c.dtype)
    for j in range(nc):
        for k in range(s):
            v = c[j, k]
            f[2 * j + 1, k] += v
            f[2 * j, k] += 0.5 * v
            f[2 * j + 2, k] += 0.5 * v
    return f


@njit
def restrict1d_loop(f):
    nf, s = f.shape
    nc = (nf - 1) // 2
    c = np.empty((nc, s), dtype=f.dtype)
    for j in range(nc):
        for k in range(s):
            c[j, k] = f[2 * j + 1, k] + 0.5 * (f[2 * j, k] + f[2 * j + 2, k])
    return c


if NUMBA_AVAILABLE:
    laplace1d = laplace1d_loop
    schwinger_a = schwinger_a_loop
    schwinger_b = schwinger_b_loop
    prolong1d = prolong1d_loop
    restrict1d = restrict1d_loop
else:
    laplace1d = laplace1d_np
    schwinger_a = schwinger_a_np
    schwinger_b = schwinger_b_np
    prolong1d = prolong1d_np
    restrict1d = restrict1d_np
