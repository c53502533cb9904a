"""Simulation kernels, compiled when available.

The Cython extension is used if it was built; otherwise the numpy fallback.
Set ``BYZINF_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("BYZINF_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

draw_symbols = _active.draw_symbols
symbol_counts = _active.symbol_counts
cumulative_deviations = _active.cumulative_deviations

__all__ = ["BACKEND", "draw_symbols", "symbol_counts", "cumulative_deviations"]
