"""Numba switch.

Kernels in :mod:`ample.kernels` come in two flavours: an explicit-loop
version compiled with ``numba.njit`` and a vectorised numpy version.  The
loop version is used when numba imports cleanly and ``AMPLE_NUMBA`` is not
set to ``0``/``false``/``off``.
"""

from __future__ import annotations

import os

_OFF = {"0", "false", "off", "no"}


def _numba_requested() -> bool:
    return os.environ.get("AMPLE_NUMBA", "1").strip().lower() not in _OFF


try:  # pragma: no cover - import guard
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if HAVE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
