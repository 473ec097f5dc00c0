"""Numba switch.

Set ``COPOPT_DISABLE_NUMBA=1`` to run the pure-numpy kernels instead of the
jitted ones (useful for debugging and for the kernel benchmark).
"""
import os

DISABLE_ENV = "COPOPT_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes")


def njit(func):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)
