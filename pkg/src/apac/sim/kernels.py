"""Graph kernels: the compiled extension when built, else the Python fallback.

Set ``APAC_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("APAC_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

topological_order = _impl.topological_order
enumerate_linear_extensions = _impl.enumerate_linear_extensions
count_linear_extensions = _impl.count_linear_extensions
random_linear_extension = _impl.random_linear_extension
list_schedule = _impl.list_schedule
longest_path = _impl.longest_path
splitmix64 = _kernels_py.splitmix64
