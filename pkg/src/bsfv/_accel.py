"""Optional numba acceleration.

Kernels are written once as plain Python over numpy arrays and compiled with
``numba.njit`` when numba is importable and ``BSFV_NUMBA`` is not set to
``0``/``false``/``off``.  Otherwise the very same functions run interpreted.
"""

from __future__ import annotations

import os

_DISABLED_VALUES = {"0", "false", "off", "no"}


def _numba_requested() -> bool:
    return os.environ.get("BSFV_NUMBA", "1").strip().lower() not in _DISABLED_VALUES


try:
    if not _numba_requested():
        raise ImportError("numba disabled through BSFV_NUMBA")
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def kernel(func):
    """Compile ``func`` in nopython mode if numba is active, else return it."""
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend_name() -> str:
    return "numba" if HAS_NUMBA else "python"
