"""Optional numba acceleration.

Hot stencil kernels are compiled with ``numba.njit`` when numba is importable
and the environment variable ``QKRYLOV_DISABLE_NUMBA`` is unset (or ``0``).
Otherwise the pure-numpy twin of every kernel is used.
"""
import os

_flag = os.environ.get("QKRYLOV_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba as _nb
    NUMBA_AVAILABLE = True
except ImportError:
    _nb = None
    NUMBA_AVAILABLE = False

_numba_setting = {"nogil": True, "cache": True}


def njit(func):
    """Compile ``func`` in nopython mode if numba is enabled, else return it."""
    if NUMBA_AVAILABLE:
        return _nb.njit(**_numba_setting)(func)
    return func


def backend():
    return "numba" if NUMBA_AVAILABLE else "numpy"
