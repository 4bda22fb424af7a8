"""Kernel lane selection: compiled extension if built, pure Python otherwise.

Set WALSHBO_PURE=1 to force the pure lane even when the extension exists
(used by the lane-comparison benchmark and tests).
"""

import os

from . import pure

try:
    from . import _native as native
except ImportError:
    native = None

if native is not None and not os.environ.get("WALSHBO_PURE"):
    _active = native
else:
    _active = pure

maxflow_mincut = _active.maxflow_mincut
bqp_scan = _active.bqp_scan


def backend():
    """Name of the kernel lane selected at import time."""
    return "native" if _active is native else "pure"
