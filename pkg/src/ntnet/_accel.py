"""Backend switch for the hot kernels.

Set ``NTNET_DISABLE_NUMBA=1`` to force the pure-numpy path. The flag is read
once at import time.
"""
import os

_DISABLED = os.environ.get("NTNET_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

NUMBA_KWARGS = {"cache": True, "nogil": True}


def njit(func):
    """``numba.njit`` with project defaults, or the identity when disabled."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(**NUMBA_KWARGS)(func)


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
