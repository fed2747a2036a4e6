import os
import subprocess
import sys

import numpy as np
import pytest

from qkrylov import kernels
from qkrylov.problems import gauge_random

from conftest import random_complex

PAIRS = [
    ("laplace1d", lambda r: (random_complex(r, 33, 3), 7.5)),
    ("schwinger_a", lambda r: (random_complex(r, 25, 2), *_links(r), 1.7)),
    ("schwinger_b", lambda r: (random_complex(r, 25, 2), *_links(r))),
    ("prolong1d", lambda r: (random_complex(r, 15, 3),)),
    ("restrict1d", lambda r: (random_complex(r, 31, 3),)),
]


def _links(r):
    g = gauge_random(5, seed=int(r.integers(1000)))
    return g.ux, g.uy


@pytest.mark.parametrize("name,args", PAIRS, ids=[p[0] for p in PAIRS])
def test_numpy_and_loop_kernels_agree(name, args, rng):
    a = args(rng)
    ref = getattr(kernels, name + "_np")(*a)
    out = getattr(kernels, name + "_loop")(*a)
    np.testing.assert_allclose(out, ref, rtol=1e-14, atol=1e-14)


def test_laplace_matches_tridiagonal(rng):
    n = 12
    L = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    X = random_complex(rng, n, 2)
    np.testing.assert_allclose(kernels.laplace1d(X, 3.0), 3.0 * L @ X, atol=1e-13)


def test_transfer_stencils_are_adjoint(rng):
    c = random_complex(rng, 7, 1)
    f = random_complex(rng, 15, 1)
    lhs = np.vdot(kernels.restrict1d(f), c)
    rhs = np.vdot(f, kernels.prolong1d(c))
    assert abs(lhs - rhs) < 1e-13


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", None)])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, QKRYLOV_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "import qkrylov; print(qkrylov.backend())"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    if expected is None:
        try:
            import numba  # noqa: F401
            expected = "numba"
        except ImportError:
            expected = "numpy"
    assert out == expected
