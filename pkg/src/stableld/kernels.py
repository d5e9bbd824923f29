"""Kernel backend selection.

The compiled extension is used when it imports; set ``STABLELD_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("STABLELD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "cython" if compiled_backend is not None else "python"

pareto_row_sums = backend.pareto_row_sums
gauss_power_sums = backend.gauss_power_sums
doubling_power_sums = backend.doubling_power_sums

__all__ = [
    "BACKEND_NAME",
    "backend",
    "compiled_backend",
    "python_backend",
    "pareto_row_sums",
    "gauss_power_sums",
    "doubling_power_sums",
]
