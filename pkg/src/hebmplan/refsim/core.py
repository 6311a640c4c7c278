"""Simulation kernel selection: compiled extension if available, numpy fallback.

Set ``HEBMPLAN_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""
import os

from . import _kernel_py

if os.environ.get("HEBMPLAN_PURE_PYTHON") == "1":
    kernel = _kernel_py
else:
    try:
        from . import _kernel_cy as kernel  # type: ignore[no-redef]
    except ImportError:
        kernel = _kernel_py

BACKEND = kernel.BACKEND


def available_backends():
    out = {"python": _kernel_py}
    try:
        from . import _kernel_cy
        out["cython"] = _kernel_cy
    except ImportError:
        pass
    return out
