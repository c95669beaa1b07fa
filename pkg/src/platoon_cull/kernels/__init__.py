"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``PLATOON_CULL_BACKEND``:

* ``numba`` - JIT-compiled loops (default when numba imports cleanly)
* ``numpy`` - vectorised numpy, no compilation step

Both backends expose the same four functions and return identical results;
``tests/test_kernels.py`` checks them against each other.
"""

import os
import warnings

from . import _numpy as numpy_impl

BACKEND_ENV = "PLATOON_CULL_BACKEND"

try:
    from . import _numba as numba_impl
except ImportError:  # numba missing or broken
    numba_impl = None


def _select(requested):
    requested = (requested or "").strip().lower()
    if requested in ("", "auto"):
        return numba_impl if numba_impl is not None else numpy_impl
    if requested == "numpy":
        return numpy_impl
    if requested == "numba":
        if numba_impl is None:
            warnings.warn("numba requested but not importable; using numpy kernels")
            return numpy_impl
        return numba_impl
    raise ValueError(f"{BACKEND_ENV} must be 'numba', 'numpy' or 'auto', got {requested!r}")


_impl = _select(os.environ.get(BACKEND_ENV))

BACKEND = _impl.NAME
project_intervals = _impl.project_intervals
sweep_pairs = _impl.sweep_pairs
match_pairs = _impl.match_pairs
all_matches = _impl.all_matches

__all__ = [
    "BACKEND",
    "BACKEND_ENV",
    "all_matches",
    "match_pairs",
    "numba_impl",
    "numpy_impl",
    "project_intervals",
    "sweep_pairs",
]
