"""Backend selection for the Monte Carlo kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``RISCHANNEL_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used. Both produce identical
uniforms; phasor sums agree to floating-point rounding.
"""

import os

from . import _fallback

_force_pure = os.environ.get("RISCHANNEL_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure-python backend requested")
    from . import _kernels as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

uniform_block = _impl.uniform_block
envelope_block = _impl.envelope_block

__all__ = ["BACKEND", "uniform_block", "envelope_block"]
