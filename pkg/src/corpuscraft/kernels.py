"""Selects the kernel backend at import time.

Prefers the compiled extension when it imported cleanly; otherwise uses the
pure-Python fallback. Setting the environment variable
``CORPUSCRAFT_PURE_PYTHON=1`` forces the fallback, which is handy for
benchmarking and for debugging suspected extension issues.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("CORPUSCRAFT_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

fnv1a64 = _impl.fnv1a64
hash_features = _impl.hash_features
bpe_merge = _impl.bpe_merge

__all__ = ["BACKEND", "fnv1a64", "hash_features", "bpe_merge"]
