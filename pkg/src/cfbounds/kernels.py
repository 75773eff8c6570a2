"""Backend selection for the residual kernels.

The compiled extension is used when it imports; set ``CFBOUNDS_BACKEND=python``
to force the numpy fallback.
"""
from __future__ import annotations

import os

from cfbounds import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("CFBOUNDS_BACKEND", "").lower() != "python":
    try:
        from cfbounds import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        pass

two_point_eval = _impl.two_point_eval
two_point_grid = _impl.two_point_grid
batch_check = _impl.batch_check

__all__ = ["BACKEND", "batch_check", "two_point_eval", "two_point_grid"]
