"""Kernel backend selection.

The numerically hot inner loops (HMM forward/backward sweeps, alignment
matrix fill, profile forward scoring) exist twice: once as numba @njit
kernels and once as pure-numpy fallbacks. The active backend is chosen at
import time from the SEQMARK_BACKEND environment variable:

    SEQMARK_BACKEND=numba   require numba (error if unavailable)
    SEQMARK_BACKEND=numpy   force the pure-numpy fallback
    SEQMARK_BACKEND=auto    use numba when importable, else numpy (default)

Tests and benchmarks can switch at runtime with set_backend().
"""

import os
import warnings

from . import _kernels_numpy

_BACKENDS = {"numpy": _kernels_numpy}
_active_name = "numpy"
_active = _kernels_numpy


def _load_numba_kernels():
    if "numba" not in _BACKENDS:
        from . import _kernels_numba

        _BACKENDS["numba"] = _kernels_numba
    return _BACKENDS["numba"]


def set_backend(name):
    """Activate a kernel backend by name ('numba' or 'numpy')."""
    global _active_name, _active
    if name == "numpy":
        _active_name, _active = "numpy", _kernels_numpy
    elif name == "numba":
        _active_name, _active = "numba", _load_numba_kernels()
    else:
        raise ValueError(f"unknown backend {name!r} (expected 'numba' or 'numpy')")
    return _active


def current_backend():
    return _active_name


def kernels():
    """Return the active kernel module."""
    return _active


def _init_from_env():
    choice = os.environ.get("SEQMARK_BACKEND", "auto").strip().lower()
    if choice == "numpy":
        set_backend("numpy")
    elif choice == "numba":
        set_backend("numba")
    else:
        try:
            set_backend("numba")
        except ImportError:
            warnings.warn("numba unavailable; falling back to pure-numpy kernels")
            set_backend("numpy")


_init_from_env()
