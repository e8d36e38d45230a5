"""Kernel selection: compiled extension when available, pure Python otherwise.

Set SPLOCAL_PURE_PYTHON=1 to force the fallback (used by the benchmark and by
CI environments without a compiler). Callers pass int32 numpy arrays; the
pure-Python implementation accepts any integer sequence.
"""

from __future__ import annotations

import os

BACKEND = "python"
if os.environ.get("SPLOCAL_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

edit_distance = _impl.edit_distance
hamming_plus_length_gap = _impl.hamming_plus_length_gap
