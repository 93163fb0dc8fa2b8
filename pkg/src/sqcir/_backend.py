"""Select the RK4 kernel backend at import time.

The compiled ``_ckernels`` extension is used when it was built; set
``SQCIR_PURE_PYTHON=1`` to force the pure-Python kernels.
"""
import os

from . import _kernels_py

if os.environ.get("SQCIR_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"


def get_kernels(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for active)."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
