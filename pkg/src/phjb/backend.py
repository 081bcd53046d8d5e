"""Backend selection for the hot kernels.

Two implementations of every kernel exist: a numba-compiled one and a pure
numpy one with identical arithmetic ordering.  The active backend is chosen
once at import time from the PHJB_BACKEND environment variable:

    auto   use numba when importable, else numpy (default)
    numba  require numba, raise if missing
    numpy  force the pure-numpy path
"""

from __future__ import annotations

import os

_CHOICES = ("auto", "numba", "numpy")


def _resolve() -> tuple[str, bool]:
    req = os.environ.get("PHJB_BACKEND", "auto").strip().lower()
    if req not in _CHOICES:
        raise ValueError(f"PHJB_BACKEND must be one of {_CHOICES}, got {req!r}")
    if req == "numpy":
        return "numpy", False
    try:
        import numba  # noqa: F401

        return "numba", True
    except ImportError:
        if req == "numba":
            raise
        return "numpy", False


BACKEND, USING_NUMBA = _resolve()


def njit_or_identity(**kwargs):
    """Return numba.njit(**kwargs) on the numba backend, else a no-op decorator."""
    if USING_NUMBA:
        from numba import njit

        return njit(**kwargs)
    return lambda fn: fn
