"""Selects the compiled kernel backend, falling back to pure Python.

Set ``ZFMIMO_PURE_PYTHON=1`` before import to force the fallback.  The
active backend name is exposed as :data:`BACKEND`.
"""

import os

from . import _kernels_py

if os.environ.get("ZFMIMO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

confluent_series = _impl.confluent_series
conditional_error = _impl.conditional_error
laguerre_sequence = _impl.laguerre_sequence
mpsk_closed = _impl.mpsk_closed

__all__ = [
    "BACKEND",
    "confluent_series",
    "conditional_error",
    "laguerre_sequence",
    "mpsk_closed",
]
