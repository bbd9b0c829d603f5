"""Optional numba acceleration.

Set ``EVALKIT_DISABLE_JIT=1`` to force the pure-numpy code paths, e.g. when
debugging or on platforms without a working numba/llvmlite install.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("EVALKIT_DISABLE_JIT", "0").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("disabled by EVALKIT_DISABLE_JIT")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator.

    The decorated function must also be valid plain Python; callers pick
    between the jitted kernel and the numpy fallback through ``HAVE_NUMBA``.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
