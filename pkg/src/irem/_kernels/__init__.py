"""Backend selection for the hot sampling kernel.

The compiled extension is preferred when it was built; the numpy fallback
is always available and produces the same values.  Set IREM_DISABLE_NATIVE=1
to force the fallback (used by tests and the benchmark).
"""

import os

from ._fallback import eval_cubic_bspline_3d as _fallback_eval

if os.environ.get("IREM_DISABLE_NATIVE"):
    _native_eval = None
else:
    try:
        from ._native import eval_cubic_bspline_3d as _native_eval
    except ImportError:
        _native_eval = None

BACKEND = "native" if _native_eval is not None else "numpy"
eval_cubic_bspline_3d = _native_eval if _native_eval is not None else _fallback_eval

__all__ = ["BACKEND", "eval_cubic_bspline_3d"]
