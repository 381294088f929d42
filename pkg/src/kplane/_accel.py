"""Numba switch.

Kernels in :mod:`kplane.kernels` come in two flavours: an ``@njit`` loop
version and a vectorised numpy version.  The loop version is used when numba
imports cleanly and ``KPLANE_USE_NUMBA`` is not set to ``0``/``false``/``no``.
"""

import logging
import os

logger = logging.getLogger(__name__)

_flag = os.environ.get("KPLANE_USE_NUMBA", "1").strip().lower()
_requested = _flag not in ("0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False
    if _requested:
        logger.warning("numba not importable; falling back to numpy kernels")

USE_NUMBA = HAVE_NUMBA and _requested


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``, or an identity decorator without numba."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
