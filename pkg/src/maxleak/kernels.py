"""Backend selection for the convolution kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  Setting ``MAXLEAK_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("MAXLEAK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

group_convolve = _impl.group_convolve
batch_group_convolve = _impl.batch_group_convolve

__all__ = ["BACKEND", "group_convolve", "batch_group_convolve"]
