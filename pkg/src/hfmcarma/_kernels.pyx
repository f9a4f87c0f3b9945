# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for path simulation and lagged moment accumulation.

All routines release the GIL so replications can run on worker threads.
Sums use Neumaier compensation.
"""
import numpy as np

from libc.math cimport fabs


def state_recursion(const double[:, ::1] phi, const double[:, ::1] xi,
                    const double[::1] z0):
    """Run ``z[t] = phi @ z[t-1] + xi[t]`` with ``z[-1] = z0``."""
    cdef Py_ssize_t n = xi.shape[0]
    cdef Py_ssize_t k = xi.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double acc
    out = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] z = out
    if n == 0:
        return out
    with nogil:
        for i in range(k):
            acc = xi[0, i]
            for j in range(k):
                acc = acc + phi[i, j] * z0[j]
            z[0, i] = acc
        for t in range(1, n):
            for i in range(k):
                acc = xi[t, i]
                for j in range(k):
                    acc = acc + phi[i, j] * z[t - 1, j]
                z[t, i] = acc
    return out


def column_sums(const double[:, ::1] y):
    """Compensated column sums of ``y``."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t d = y.shape[1]
    cdef Py_ssize_t r, c
    cdef double s, comp, x, t
    out = np.empty(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for c in range(d):
            s = 0.0
            comp = 0.0
            for r in range(n):
                x = y[r, c]
                t = s + x
                if fabs(s) >= fabs(x):
                    comp = comp + ((s - t) + x)
                else:
                    comp = comp + ((x - t) + s)
                s = t
            o[c] = s + comp
    return out


def lagged_cross_sums(const double[:, ::1] y, const double[::1] center,
                      const long long[::1] lags):
    """Compensated ``sum_k (y[k,i]-c[i]) * (y[k+h,j]-c[j])`` for each lag ``h``.

    Returns an array of shape ``(len(lags), d, d)``; the sum runs over
    ``k = 0 .. n-h-1``.
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t d = y.shape[1]
    cdef Py_ssize_t nl = lags.shape[0]
    cdef Py_ssize_t l, i, j, k, h
    cdef double s, comp, x, t
    out = np.zeros((nl, d, d), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    with nogil:
        for l in range(nl):
            h = <Py_ssize_t>lags[l]
            if h >= n:
                continue
            for i in range(d):
                for j in range(d):
                    s = 0.0
                    comp = 0.0
                    for k in range(n - h):
                        x = (y[k, i] - center[i]) * (y[k + h, j] - center[j])
                        t = s + x
                        if fabs(s) >= fabs(x):
                            comp = comp + ((s - t) + x)
                        else:
                            comp = comp + ((x - t) + s)
                        s = t
                    o[l, i, j] = s + comp
    return out
