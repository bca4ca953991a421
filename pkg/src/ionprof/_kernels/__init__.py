"""Tree-kernel backend selection.

The compiled extension is preferred; the numpy fallback keeps the package
fully functional without a compiler. Set IONPROF_FORCE_FALLBACK=1 to force
the fallback (used by the parity tests and the backend benchmark).
"""
import os

from . import fallback as _fallback

if os.environ.get("IONPROF_FORCE_FALLBACK", "") == "1":
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
build_tree = _impl.build_tree
predict_tree = _impl.predict_tree

__all__ = ["BACKEND", "build_tree", "predict_tree", "fallback"]
fallback = _fallback
