"""Kernel backend selection.

The compiled extension (`_fast`, Cython) is used when importable; the
pure-Python reference (`pure`) otherwise.  Set DPOPE_BACKEND=pure to force
the fallback.  Both produce bit-identical traces, so backend choice never
affects results, only speed.
"""
from __future__ import annotations

import os

from . import pure

try:
    from . import _fast as fast
except ImportError:  # extension not built
    fast = None


def active_backend():
    if os.environ.get("DPOPE_BACKEND", "").lower() == "pure":
        return pure
    return fast if fast is not None else pure


def backend_name() -> str:
    return "fast" if active_backend() is fast and fast is not None else "pure"
