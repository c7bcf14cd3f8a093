"""Simplex backend selection.

Two interchangeable kernels implement the bounded-variable simplex contract
(``cold_solve`` / ``warm_resolve``): a compiled Cython extension and a pure
numpy module.  The compiled one is preferred when the extension built; setting
``LIMBPLAN_BACKEND=python`` forces the numpy kernel (useful for debugging and
for benchmarking one against the other).
"""

import os

from .. import _simplex_py

if os.environ.get("LIMBPLAN_BACKEND", "").strip().lower() == "python":
    kernel = _simplex_py
else:
    try:
        from .. import _simplex as kernel  # type: ignore[no-redef]
    except ImportError:
        kernel = _simplex_py

BACKEND = kernel.BACKEND_NAME

# Kernel status codes (identical across backends).
OPTIMAL = _simplex_py.OPTIMAL
INFEASIBLE = _simplex_py.INFEASIBLE
UNBOUNDED = _simplex_py.UNBOUNDED
ITER_LIMIT = _simplex_py.ITER_LIMIT
NUMERICAL = _simplex_py.NUMERICAL
NEED_COLD = _simplex_py.NEED_COLD
