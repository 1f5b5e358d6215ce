"""Numba switch.

Kernels in :mod:`graphtopo.kernels` come in two flavours: an ``@njit`` loop
version and a pure-numpy version. Setting ``GRAPHTOPO_DISABLE_NUMBA=1``
(or running without numba installed) selects the numpy path at import time.
"""
import os
import warnings

_FLAG = os.environ.get("GRAPHTOPO_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """``numba.njit(cache=True)`` when numba is usable, else a no-op."""
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def set_threads(n):
    if USE_NUMBA and n:
        # numba probes its threading layers here and warns about old TBB builds
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
