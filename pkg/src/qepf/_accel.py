"""Numba dispatch.

Set ``QEPF_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy /
pure-Python path. The flag is read once, at import time.
"""
import os

DISABLED = os.environ.get("QEPF_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(fn):
    """``numba.njit(cache=True)`` when acceleration is on, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend():
    return "numba" if USE_NUMBA else "numpy"
