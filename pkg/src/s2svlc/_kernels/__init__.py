"""Hot image kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``S2SVLC_DISABLE_NUMBA`` is set to a non-empty value other than ``0``.
Both paths agree to floating-point round-off.
"""
import os

from . import _numpy

_disabled = os.environ.get("S2SVLC_DISABLE_NUMBA", "") not in ("", "0")

if _disabled:
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba missing
        _impl = _numpy
        BACKEND = "numpy"

warp_bilinear = _impl.warp_bilinear
convolve_separable = _impl.convolve_separable
window_sum = _impl.window_sum

__all__ = ["BACKEND", "warp_bilinear", "convolve_separable", "window_sum"]
