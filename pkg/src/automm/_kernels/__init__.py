"""Elementwise interval kernels with a compiled fast path.

The Cython extension ``_fast`` fuses the endpoint products, min/max
reduction and outward rounding into one pass.  It is selected at import
time when available; set ``AUTOMM_NO_EXT=1`` to force the NumPy
fallback.  Both backends implement the same contract and are checked
against each other in the test suite.
"""

import os

from . import _numpy

if os.environ.get("AUTOMM_NO_EXT"):
    _impl = _numpy
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _numpy

BACKEND = _impl.BACKEND

nudge_down = _impl.nudge_down
nudge_up = _impl.nudge_up
iv_add = _impl.iv_add
iv_sub = _impl.iv_sub
iv_mul = _impl.iv_mul
iv_scale = _impl.iv_scale
