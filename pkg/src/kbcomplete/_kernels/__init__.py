"""Kernel backend selection.

Prefers the compiled Cython kernel and falls back to the pure-Python mirror
when the extension was not built. `KBCOMPLETE_KERNEL=python` forces the
fallback (useful for benchmarking and differential testing).
"""

import os

from kbcomplete._kernels import pure

if os.environ.get("KBCOMPLETE_KERNEL", "").lower() == "python":
    _impl = pure
else:
    try:
        from kbcomplete._kernels import _native as _impl
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND
satisfy_mask = _impl.satisfy_mask
