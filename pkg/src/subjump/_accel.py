"""Numba switch.  Set ``SUBJUMP_DISABLE_NUMBA=1`` to run the pure-numpy kernels."""

import os

DISABLED = os.environ.get("SUBJUMP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(fn):
    """Compile ``fn`` with numba when enabled, else return it untouched."""
    if not USE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
