"""Time the numba loop kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 20]

The second section times a full restarted QFOM run in two subprocesses, one
with ``QKRYLOV_DISABLE_NUMBA=1``, so the backend switch itself is exercised.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qkrylov import kernels
from qkrylov._accel import NUMBA_AVAILABLE


def _cases(rng):
    N = 4095
    x = rng.standard_normal((N, 8)) + 1j * rng.standard_normal((N, 8))
    L = 64
    g = np.exp(2j * np.pi * rng.random((2, L, L)))
    psi = rng.standard_normal((L * L, 8)) + 1j * rng.standard_normal((L * L, 8))
    c = rng.standard_normal((2047, 8)) + 1j * rng.standard_normal((2047, 8))
    return [
        ("laplace1d N=4095 x8", kernels.laplace1d_np, kernels.laplace1d_loop, (x, 1.0)),
        ("schwinger_a 64^2 x8", kernels.schwinger_a_np, kernels.schwinger_a_loop, (psi, g[0], g[1], 2.0)),
        ("schwinger_b 64^2 x8", kernels.schwinger_b_np, kernels.schwinger_b_loop, (psi, g[0], g[1])),
        ("prolong1d 2047 x8", kernels.prolong1d_np, kernels.prolong1d_loop, (c,)),
        ("restrict1d 4095 x8", kernels.restrict1d_np, kernels.restrict1d_loop, (x,)),
    ]


_SOLVE = (
    "import time, numpy as np; from qkrylov import hain_lust, restarted_quad_solve, backend;"
    "A = hain_lust(4095); b = A.matvec(np.ones(A.n, complex));"
    "restarted_quad_solve(A, b, m=10, maxrestarts=1);"
    "t = time.perf_counter(); restarted_quad_solve(A, b, m=50, maxrestarts=5);"
    "print(backend(), time.perf_counter() - t)"
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':24s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, f_np, f_nb, a in _cases(rng):
        ref = f_np(*a)
        out = f_nb(*a)  # compiles on first call when numba is active
        assert np.allclose(ref, out, rtol=1e-13, atol=1e-13), name
        t_np = min(timeit.repeat(lambda: f_np(*a), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*a), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:24s} {t_np:11.3f} {t_nb:11.3f} {t_np / t_nb:8.2f}")
    if not NUMBA_AVAILABLE:
        print("numba not active: the 'numba' column ran the plain-Python loops")

    print("\nrestarted QFOM, Hain-Lust N=4095, m=50, 5 cycles")
    for flag in ("0", "1"):
        env = dict(os.environ, QKRYLOV_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _SOLVE], env=env, capture_output=True, text=True)
        print("  " + (res.stdout.strip() or res.stderr.strip().splitlines()[-1]))


if __name__ == "__main__":
    main()
