"""Import-time selection between the compiled kernels and the numpy fallback.

Set ``HFMCARMA_PURE_PYTHON=1`` before import to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

if os.environ.get("HFMCARMA_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def state_recursion(phi, xi, z0, impl=None):
    """States ``z[t] = phi z[t-1] + xi[t]`` for ``t = 0..n-1`` given ``z[-1] = z0``."""
    return (impl or _impl).state_recursion(_c(phi), _c(xi), _c(z0))


def column_sums(y, impl=None):
    return (impl or _impl).column_sums(_c(y))


def lagged_cross_sums(y, center, lags, impl=None):
    lags = np.ascontiguousarray(lags, dtype=np.longlong)
    return (impl or _impl).lagged_cross_sums(_c(y), _c(center), lags)


def implementations():
    """Available backends by name, for benchmarks and cross-checks."""
    out = {"python": _fallback}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out


__all__ = ["BACKEND", "state_recursion", "column_sums", "lagged_cross_sums", "implementations"]
