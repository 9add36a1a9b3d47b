"""Kernel backend selection.

The compiled extension (``_native``) is used when it importable and the
ACUFUSION_PURE environment variable is unset; otherwise the pure-Python
reference implementations take over.  Both expose the same functions with
the same semantics; ``BACKEND`` records which one won.
"""

import os

from . import _reference

if os.environ.get("ACUFUSION_PURE"):
    _impl = _reference
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = _reference
        BACKEND = "pure"

lt_replay = _impl.lt_replay
lt_track = _impl.lt_track
rot_replay = _impl.rot_replay
rot_track = _impl.rot_track
mahony_batch = _impl.mahony_batch
confidence_batch = _impl.confidence_batch
zupt_integrate = _impl.zupt_integrate

__all__ = [
    "BACKEND", "lt_replay", "lt_track", "rot_replay", "rot_track",
    "mahony_batch", "confidence_batch", "zupt_integrate",
]
