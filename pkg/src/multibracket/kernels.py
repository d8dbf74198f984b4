"""Kernel backend selection.

The compiled extension is used when importable; set ``MULTIBRACKET_PURE=1``
to force the numpy fallback.
"""

import os

from . import _fallback

if os.environ.get("MULTIBRACKET_PURE", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

tail_sums = _impl.tail_sums
win_sums = _impl.win_sums
sample_brackets = _impl.sample_brackets
score_brackets = _impl.score_brackets
max_score = _impl.max_score
