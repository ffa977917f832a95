"""Kernel backend selection.

The Cython extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``RESCAL_TRANSITIVE_BACKEND=python`` to force the
fallback.
"""
import os

from . import _fallback

BACKEND = "python"
if os.environ.get("RESCAL_TRANSITIVE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

sgd_epoch = _impl.sgd_epoch
bilinear_pairs = _impl.bilinear_pairs

__all__ = ["BACKEND", "sgd_epoch", "bilinear_pairs"]
