"""Dense matrix calculus: vec, Kronecker products, commutation matrix,
matrix exponentials and Kronecker-sum Lyapunov solves.

Conventions follow column-major ``vec``: ``vec(x y^T) = y (x) x`` and
``vec(A B C) = (C^T (x) A) vec(B)``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import UnstableMatrixError

STABILITY_TOL = 1e-10


def vec(m):
    """Stack the columns of ``m`` into a vector."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return m.reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None):
    """Inverse of :func:`vec`."""
    cols = rows if cols is None else cols
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")


def kron(a, b):
    """Kronecker product; two 1-d vectors give a 1-d vector."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def kron_permutation(m: int):
    """The commutation matrix P with ``P (x (x) y) = y (x) x`` for x, y in R^m."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    p = np.zeros((m * m, m * m))
    for i in range(m):
        for j in range(m):
            # block (i, j) of sum_{i,j} e_i e_j^T (x) e_j e_i^T holds e_j e_i^T
            p[i * m + j, j * m + i] = 1.0
    return p


def kron_sum(a, b=None):
    """Kronecker sum ``a (x) I + I (x) b`` (``b`` defaults to ``a``)."""
    a = np.atleast_2d(a)
    b = a if b is None else np.atleast_2d(b)
    return np.kron(a, np.eye(b.shape[0])) + np.kron(np.eye(a.shape[0]), b)


def expm(a, t: float = 1.0):
    """Matrix exponential ``exp(a t)``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {a.shape}")
    return scipy.linalg.expm(a * t)


def psd_sqrt(m):
    """A factor ``L`` with ``L L^T = m`` for symmetric PSD ``m`` (eigenvalues clipped at 0)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return v * np.sqrt(np.clip(w, 0.0, None))


def symmetrize(m):
    return 0.5 * (m + m.T)


class StableMatrix:
    """A square matrix whose spectrum lies in the open left half-plane.

    The check rejects eigenvalues with real part above ``-1e-10``.
    """

    def __init__(self, a, tol: float = STABILITY_TOL):
        a = np.array(np.atleast_2d(a), dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"stable matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        eig = np.linalg.eigvals(a)
        abscissa = float(np.max(eig.real))
        if abscissa >= -tol:
            raise UnstableMatrixError(
                f"spectral abscissa {abscissa:.3e} is not below -{tol:g}; "
                "the stationary solution does not exist"
            )
        a.setflags(write=False)
        self.a = a
        self.eigenvalues = eig
        self.abscissa = abscissa
        self._envelope = None

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def expm(self, t: float):
        return scipy.linalg.expm(self.a * t)

    def decay_envelope(self):
        """Constants ``(c, alpha)`` with ``||exp(a t)||_2 <= c exp(-alpha t)`` for t >= 0.

        ``alpha`` is the decay rate shaved by 1e-3; ``c`` is fitted on a grid
        long enough to cover the transient, then doubled as a safety margin.
        """
        if self._envelope is None:
            alpha = -self.abscissa * (1.0 - 1e-3)
            horizon = max(5.0, 10.0 / alpha)
            ts = np.linspace(0.0, horizon, 401)
            step = scipy.linalg.expm(self.a * (ts[1] - ts[0]))
            e = np.eye(self.dim)
            c = 1.0
            for t in ts[1:]:
                e = e @ step
                c = max(c, np.linalg.norm(e, 2) * np.exp(alpha * t))
            self._envelope = (2.0 * c, alpha)
        return self._envelope

    def __repr__(self):
        return f"StableMatrix(dim={self.dim}, abscissa={self.abscissa:.4g})"


def as_stable(a) -> StableMatrix:
    return a if isinstance(a, StableMatrix) else StableMatrix(a)


def solve_kron_sum(a, c):
    """Solve ``a X + X a^T + c = 0`` for ``X`` through the Kronecker-sum system.

    ``c`` need not be symmetric.  ``a`` must have no pair of eigenvalues
    summing to zero; for a stable ``a`` this always holds.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = a.shape[0]
    ks = kron_sum(a)
    try:
        x = np.linalg.solve(ks, -vec(c))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular Kronecker-sum system") from exc
    return unvec(x, n)


def lyapunov_stationary(a, q):
    """Stationary covariance ``V = int_0^inf exp(a s) q exp(a^T s) ds``.

    Solves ``a V + V a^T + q = 0``; the result is symmetrized.
    """
    sa = as_stable(a)
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if q.shape != sa.a.shape:
        raise ValueError(f"q has shape {q.shape}, expected {sa.a.shape}")
    if not np.allclose(q, q.T, atol=1e-12 * max(1.0, np.abs(q).max())):
        raise ValueError("q must be symmetric")
    v = solve_kron_sum(sa.a, q)
    resid = sa.a @ v + v @ sa.a.T + q
    qn = max(np.linalg.norm(q), np.finfo(float).tiny)
    if np.linalg.norm(resid) > 1e-10 * qn:
        # one round of iterative refinement
        v = v + solve_kron_sum(sa.a, resid)
        resid = sa.a @ v + v @ sa.a.T + q
        if np.linalg.norm(resid) > 1e-10 * qn:
            raise np.linalg.LinAlgError(
                f"Lyapunov residual {np.linalg.norm(resid):.2e} exceeds tolerance"
            )
    return symmetrize(v)
