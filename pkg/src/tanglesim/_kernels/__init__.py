"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is the fallback
and the reference for bit-identical behaviour. Set TANGLESIM_PURE=1 to force
the fallback (used by the benchmark and by parity tests).
"""
from __future__ import annotations

import os
import threading

import numpy as np

from . import pyfallback

if os.environ.get("TANGLESIM_PURE"):
    _impl = pyfallback
    COMPILED = False
else:
    try:
        from . import _accel as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        _impl = pyfallback
        COMPILED = False

BACKEND: str = _impl.BACKEND

walk_step = _impl.walk_step
bump_cone = _impl.bump_cone
cone_tag_counts = _impl.cone_tag_counts
cone_contains = _impl.cone_contains


def backends() -> dict[str, object]:
    """All importable backends by name (for parity tests and benchmarks)."""
    out: dict[str, object] = {"python": pyfallback}
    try:
        from . import _accel  # type: ignore[attr-defined]

        out["compiled"] = _accel
    except ImportError:
        pass
    return out


class Scratch:
    """Reusable visited-set bookkeeping for the cone kernels.

    `stamp` is epoch-stamped instead of cleared: each traversal uses a fresh
    epoch value, so repeated calls cost no memset. One Scratch must not be
    shared between threads; use `local_scratch` from worker code.
    """

    __slots__ = ("stamp", "stack", "epoch")

    def __init__(self, capacity: int = 1024):
        self.stamp = np.zeros(capacity, dtype=np.int64)
        self.stack = np.empty(capacity, dtype=np.int64)
        self.epoch = 0

    def ensure(self, n: int) -> None:
        # Grow in place: callers may have evaluated `sc.stamp` before the
        # `sc.next_epoch(n)` in the same argument list, so rebinding fresh
        # arrays here would hand the kernel stale undersized buffers.
        if n > self.stamp.shape[0]:
            cap = max(n, 2 * self.stamp.shape[0])
            self.stamp.resize(cap, refcheck=False)
            self.stack.resize(cap, refcheck=False)

    def next_epoch(self, n: int) -> int:
        self.ensure(n)
        self.epoch += 1
        return self.epoch


_tls = threading.local()


def local_scratch(n: int) -> Scratch:
    """Per-thread Scratch, grown to hold at least n ids."""
    sc = getattr(_tls, "scratch", None)
    if sc is None:
        sc = Scratch(max(n, 1024))
        _tls.scratch = sc
    sc.ensure(n)
    return sc
