"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly.  Setting
``NDASNR_BACKEND=python`` forces the numpy fallback; ``NDASNR_BACKEND=cython``
makes a missing extension an import error instead of a silent fallback.
"""

import importlib
import os

from . import _pykernels

_requested = os.environ.get("NDASNR_BACKEND", "auto").lower()

if _requested == "python":
    kernels = _pykernels
else:
    try:
        kernels = importlib.import_module("ndasnr._kernels")
    except ImportError:
        if _requested == "cython":
            raise
        kernels = _pykernels

BACKEND = kernels.BACKEND


def get_kernels(name=None):
    """Return a kernel module by name (``"cython"``/``"python"``), or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("ndasnr._kernels")
    raise ValueError(f"unknown backend {name!r}")
