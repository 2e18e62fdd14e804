"""JIT selection.

Every hot kernel in the package is written once, in the subset of Python that
numba's nopython mode accepts, and decorated with :func:`njit` from here.
Setting ``FIGGIE_DISABLE_JIT=1`` (or running without numba installed) turns
the decorator into the identity so the same source runs as plain
Python/numpy.  Both paths produce bit-identical simulations.
"""

import os

_DISABLED = os.environ.get("FIGGIE_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

JIT_ENABLED = HAS_NUMBA and not _DISABLED


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when JIT is enabled, identity otherwise."""
    if func is None:
        return lambda f: njit(f, **kwargs)
    if not JIT_ENABLED:
        return func
    kwargs.setdefault("cache", True)
    return numba.njit(**kwargs)(func)
