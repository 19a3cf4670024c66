"""Optional numba acceleration.

Set ``GFCOUNT_DISABLE_NUMBA=1`` to run every kernel as plain numpy code.
Kernels decorated with :func:`kernel` keep the undecorated function on
``.py_func`` in both modes, so benchmarks can compare the two paths.
"""
import os

_FLAG = os.environ.get("GFCOUNT_DISABLE_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    if not NUMBA_REQUESTED:
        raise ImportError
    from numba import njit as _njit
    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def kernel(func):
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(func)
    func.py_func = func
    return func


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
