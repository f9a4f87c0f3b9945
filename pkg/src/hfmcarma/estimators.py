"""Sample mean, autocovariance, autocorrelation and cross-covariance on grid data.

Both autocovariance variants divide by ``n`` and sum over
``k = 1..n - h/delta``.  Sums are compensated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import OffGridLagError
from .io import write_csv

GRID_TOL = 1e-9


def snap_lag(h: float, delta: float) -> float:
    """Largest grid lag not above ``h``: ``floor(h/delta) * delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return math.floor(h / delta + GRID_TOL) * delta


def _multiplier(h: float, delta: float) -> int:
    if h < 0:
        raise ValueError(f"lag must be nonnegative, got {h}")
    x = h / delta
    k = round(x)
    if abs(x - k) > GRID_TOL * max(1.0, abs(x)):
        raise OffGridLagError(
            f"lag {h:g} is not a multiple of delta={delta:g}; "
            f"use snap_lag({h:g}, {delta:g}) = {snap_lag(h, delta):g} to move it onto the grid"
        )
    return int(k)


class LagSet:
    """Sorted grid lags stored as integer multiples of ``delta``."""

    def __init__(self, delta: float, lags=None, *, steps=None):
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.delta = float(delta)
        if steps is None:
            if lags is None:
                raise ValueError("give lags or steps")
            steps = [_multiplier(float(h), self.delta) for h in lags]
        steps = sorted({int(k) for k in steps})
        if steps and steps[0] < 0:
            raise ValueError("lag multipliers must be nonnegative")
        self.steps = tuple(steps)

    @classmethod
    def from_steps(cls, delta: float, steps) -> "LagSet":
        return cls(delta, steps=steps)

    @property
    def lags(self) -> tuple:
        return tuple(k * self.delta for k in self.steps)

    def __iter__(self):
        return iter(self.lags)

    def __len__(self):
        return len(self.steps)

    def __repr__(self):
        return f"LagSet(delta={self.delta:g}, steps={list(self.steps)})"

    def check(self, n: int) -> None:
        if self.steps and self.steps[-1] > n - 1:
            raise ValueError(
                f"lag multiplier {self.steps[-1]} exceeds n - 1 = {n - 1}"
            )


def _as_lagset(lags, delta) -> LagSet:
    if isinstance(lags, LagSet):
        if abs(lags.delta - delta) > GRID_TOL * delta:
            raise OffGridLagError(f"lag set built for delta={lags.delta:g}, path has {delta:g}")
        return lags
    if np.isscalar(lags):
        lags = [lags]
    return LagSet(delta, lags)


@dataclass
class AcfEstimate:
    """Estimated autocovariances keyed by lag multiplier."""

    lags: LagSet
    gamma_hat: dict
    n: int
    delta: float
    mean_adjusted: bool

    def at(self, h: float) -> np.ndarray:
        return self.gamma_hat[_multiplier(h, self.delta)]

    def rows(self):
        """``(lag, i, j, value)`` with 1-based components in lexicographic order."""
        for k in self.lags.steps:
            g = self.gamma_hat[k]
            for i in range(g.shape[0]):
                for j in range(g.shape[1]):
                    yield k * self.delta, i + 1, j + 1, float(g[i, j])

    def to_csv(self, path) -> Path:
        return write_csv(path, ["lag", "i", "j", "value"],
                         ((format(h, ".12g"), i, j, v) for h, i, j, v in self.rows()))


def _obs(path):
    y = path.observations if hasattr(path, "observations") else np.asarray(path, dtype=float)
    y = np.asarray(y, dtype=float)
    return y[:, None] if y.ndim == 1 else y


def _delta(path, delta):
    if delta is not None:
        return float(delta)
    return float(getattr(path, "delta", 1.0))


def sample_mean(path, impl=None) -> np.ndarray:
    y = _obs(path)
    if y.shape[0] < 1:
        raise ValueError("empty path")
    return _backend.column_sums(y, impl=impl) / y.shape[0]


def sample_acvf(path, lags, mean_adjusted: bool = True, *, delta: float | None = None,
                impl=None) -> AcfEstimate:
    """``Gamma_hat(h) = n^{-1} sum_{k <= n - h/delta} (Y_k - c)(Y_{k+h/delta} - c)^T``.

    ``c`` is the sample mean when ``mean_adjusted``, else zero.
    """
    y = _obs(path)
    n = y.shape[0]
    dt = _delta(path, delta)
    ls = _as_lagset(lags, dt)
    ls.check(n)
    center = sample_mean(y, impl=impl) if mean_adjusted else np.zeros(y.shape[1])
    sums = _backend.lagged_cross_sums(y, center, np.asarray(ls.steps), impl=impl)
    gamma = {k: sums[i] / n for i, k in enumerate(ls.steps)}
    if 0 in gamma:
        gamma[0] = 0.5 * (gamma[0] + gamma[0].T)
    return AcfEstimate(ls, gamma, n, dt, bool(mean_adjusted))


def sample_acf(path, lags, *, delta: float | None = None, impl=None) -> dict:
    """``rho_hat(h) = gamma_hat(h) / gamma_hat(0)`` for scalar data, keyed by lag."""
    y = _obs(path)
    if y.shape[1] != 1:
        raise ValueError("sample_acf needs scalar data")
    dt = _delta(path, delta)
    ls = _as_lagset(lags, dt)
    full = LagSet.from_steps(dt, set(ls.steps) | {0})
    est = sample_acvf(y, full, True, delta=dt, impl=impl)
    g0 = float(est.gamma_hat[0][0, 0])
    if not g0 > 0:
        raise ValueError("sample variance is zero; autocorrelation undefined")
    return {k * dt: (1.0 if k == 0 else float(est.gamma_hat[k][0, 0]) / g0) for k in ls.steps}


def sample_cross_cov(path, i: int, j: int, lags, *, delta: float | None = None,
                     impl=None) -> dict:
    """``e_i^T Gamma_hat(h) e_j`` (1-based ``i, j``), keyed by lag."""
    y = _obs(path)
    d = y.shape[1]
    for c in (i, j):
        if not 1 <= int(c) <= d:
            raise IndexError(f"component {c} out of range 1..{d}")
    est = sample_acvf(y, lags, True, delta=_delta(path, delta), impl=impl)
    return {k * est.delta: float(est.gamma_hat[k][i - 1, j - 1]) for k in est.lags.steps}
