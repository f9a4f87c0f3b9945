"""Pure-Python versions of the routines in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built or when
``HFMCARMA_PURE_PYTHON`` is set.  ``math.fsum`` gives exactly rounded sums, so
results agree with the compensated compiled sums to within an ulp or two.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter


def state_recursion(phi, xi, z0):
    phi = np.asarray(phi, dtype=float)
    xi = np.asarray(xi, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    n, k = xi.shape
    if n == 0:
        return np.empty((0, k))
    if k == 1:
        a = phi[0, 0]
        out, _ = lfilter([1.0], [1.0, -a], xi[:, 0], zi=[a * z0[0]])
        return out.reshape(n, 1)
    out = np.empty((n, k))
    z = z0
    for t in range(n):
        z = xi[t] + phi @ z
        out[t] = z
    return out


def column_sums(y):
    y = np.asarray(y, dtype=float)
    return np.array([math.fsum(y[:, c]) for c in range(y.shape[1])])


def lagged_cross_sums(y, center, lags):
    y = np.asarray(y, dtype=float)
    yc = y - np.asarray(center, dtype=float)
    n, d = y.shape
    out = np.zeros((len(lags), d, d))
    for l, h in enumerate(lags):
        h = int(h)
        if h >= n:
            continue
        left, right = yc[: n - h], yc[h:]
        for i in range(d):
            for j in range(d):
                out[l, i, j] = math.fsum(left[:, i] * right[:, j])
    return out
