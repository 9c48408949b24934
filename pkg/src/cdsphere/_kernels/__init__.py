"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the NumPy fallback.
Set ``CDSPHERE_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernels as python

compiled = None
if os.environ.get("CDSPHERE_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

sturm_count = active.sturm_count
tridiag_eig_bisect = active.tridiag_eig_bisect
wos_advance = active.wos_advance
scaled_weight = active.scaled_weight
partial_panel_integral = active.partial_panel_integral
quantile_bisect = active.quantile_bisect

__all__ = [
    "BACKEND",
    "compiled",
    "python",
    "sturm_count",
    "tridiag_eig_bisect",
    "wos_advance",
    "scaled_weight",
    "partial_panel_integral",
    "quantile_bisect",
]
