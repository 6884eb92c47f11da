"""Kernel backend selection.

The compiled Cython kernels are used when the extension was built; otherwise,
or when ``CHSHMAGIC_PURE_PYTHON`` is set to a non-empty value, the numpy
fallback is used.  Both expose the same four functions.
"""
import os

from . import _pykernels

try:
    if os.environ.get("CHSHMAGIC_PURE_PYTHON"):
        raise ImportError("pure-Python kernels forced by environment")
    from . import _ckernels as kernels
except ImportError:
    kernels = _pykernels

BACKEND = kernels.BACKEND


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
