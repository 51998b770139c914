"""Numba switch.

Set ``FORGE_DISABLE_NUMBA=1`` to force the pure-numpy kernels (useful for
debugging and for the benchmark baseline).
"""

import os

_DISABLED = os.environ.get("FORGE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(func):
    """Compile ``func`` with numba when available, otherwise return it untouched."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, fastmath=True)(func)
