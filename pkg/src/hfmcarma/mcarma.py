"""MCARMA(p, q) models in state-space form and their exact grid simulation.

The state ``Z`` solves ``dZ_t = A Z_t dt + B dL_t`` with the companion matrix
``A`` whose last block row is ``(-P_p, ..., -P_1)``; the output is
``Y_t = E Z_t`` with ``E = (I_d, 0, ..., 0)``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import _backend
from .errors import BurnInError, SimulationError
from .io import fmt, write_csv
from .levy import LevyDriver, driver_from_config
from .linalg import StableMatrix, lyapunov_stationary, psd_sqrt, symmetrize
from .streams import as_generator

BURN_IN_TARGET = 1e-8
BURN_IN_BUDGET = 10**7


def _as_blocks(seq, rows, cols, name):
    out = []
    for k, x in enumerate(seq):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if rows is not None and x.shape != (rows, cols):
            raise ValueError(f"{name}[{k}] has shape {x.shape}, expected {(rows, cols)}")
        rows, cols = x.shape
        out.append(x)
    return out


def _model_id(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Discretization:
    """Exact one-step transition of the state over a grid step ``delta``."""

    delta: float
    phi: np.ndarray           # exp(A delta)
    gauss_factor: np.ndarray  # L with L L^T = Sigma_xi (Brownian part)
    gauss_cov: np.ndarray
    drift_map: np.ndarray     # A^{-1}(exp(A delta) - I) B


class McarmaModel:
    """A validated causal MCARMA(p, q) model.

    Use :func:`build_model` to construct one.
    """

    def __init__(self, ar, ma, driver: LevyDriver):
        if not isinstance(driver, LevyDriver):
            raise TypeError("driver must be a LevyDriver")
        ar = list(ar)
        ma = list(ma)
        if not ar:
            raise ValueError("need at least one autoregressive coefficient")
        if not ma:
            raise ValueError("need at least one moving-average coefficient")
        self.ar = _as_blocks(ar, None, None, "ar")
        d = self.ar[0].shape[0]
        if self.ar[0].shape != (d, d):
            raise ValueError("autoregressive coefficients must be square")
        self.ma = _as_blocks(ma, d, driver.dim, "ma")
        self.p, self.q = len(self.ar), len(self.ma) - 1
        if self.q >= self.p:
            raise ValueError(f"need q < p, got p={self.p}, q={self.q}")
        if not np.any(self.ma[0]):
            raise ValueError("Q_0 must be nonzero")
        self.d, self.m = d, driver.dim
        self.driver = driver
        self.lam = self._companion()
        self.e = np.hstack([np.eye(d)] + [np.zeros((d, d))] * (self.p - 1))
        self.b = self._b_blocks()
        self.stable = StableMatrix(-self.lam)
        self._cache: dict = {}

    # construction

    def _companion(self):
        p, d = self.p, self.d
        lam = np.zeros((p * d, p * d))
        for i in range(p - 1):
            lam[i * d:(i + 1) * d, (i + 1) * d:(i + 2) * d] = -np.eye(d)
        for i in range(p):
            # last block row: (P_p, ..., P_1)
            lam[(p - 1) * d:, i * d:(i + 1) * d] = self.ar[p - 1 - i]
        return lam

    def _b_blocks(self):
        p, q, d, m = self.p, self.q, self.d, self.m
        b = {k: np.zeros((d, m)) for k in range(1, p - q)}
        for j in range(q, -1, -1):
            k = p - j
            acc = self.ma[q - j].copy()
            for i in range(1, k):
                acc -= self.ar[i - 1] @ b[k - i]
            b[k] = acc
        return np.vstack([b[k] for k in range(1, p + 1)])

    @property
    def a(self) -> np.ndarray:
        return self.stable.a

    @property
    def state_dim(self) -> int:
        return self.p * self.d

    def to_config(self) -> dict:
        return {
            "type": "mcarma",
            "ar": [x.tolist() for x in self.ar],
            "ma": [x.tolist() for x in self.ma],
            "driver": self.driver.to_config(),
        }

    @property
    def model_id(self) -> str:
        return _model_id(self.to_config())

    def __repr__(self):
        return f"McarmaModel(d={self.d}, m={self.m}, p={self.p}, q={self.q}, id={self.model_id})"

    # second-order structure

    def kernel(self, t: float) -> np.ndarray:
        """``f(t) = E exp(A t) B`` for ``t > 0``, zero otherwise."""
        if not t > 0:
            return np.zeros((self.d, self.m))
        return self.e @ self.stable.expm(t) @ self.b

    def stationary_state_cov(self) -> np.ndarray:
        if "V" not in self._cache:
            q = symmetrize(self.b @ self.driver.sigma_L @ self.b.T)
            self._cache["V"] = lyapunov_stationary(self.stable, q)
        return self._cache["V"]

    def acvf(self, h: float) -> np.ndarray:
        """``Gamma(h) = E(Y_0 Y_h^T)``; negative lags via ``Gamma(-h) = Gamma(h)^T``."""
        if h < 0:
            return self.acvf(-h).T
        v = self.stationary_state_cov()
        g = self.e @ v @ self.stable.expm(h).T @ self.e.T
        return symmetrize(g) if h == 0 else g

    # simulation

    def discretization(self, delta: float) -> Discretization:
        delta = float(delta)
        key = ("disc", delta)
        if key not in self._cache:
            a, k = self.a, self.state_dim
            q = symmetrize(self.b @ self.driver.gaussian_cov @ self.b.T)
            big = np.zeros((2 * k, 2 * k))
            big[:k, :k] = a
            big[:k, k:] = q
            big[k:, k:] = -a.T
            ex = scipy.linalg.expm(big * delta)
            phi = ex[:k, :k]
            cov = symmetrize(ex[:k, k:] @ phi.T)
            drift_map = np.linalg.solve(a, phi - np.eye(k)) @ self.b
            self._cache[key] = Discretization(delta, phi, psd_sqrt(cov), cov, drift_map)
        return self._cache[key]

    def burn_in_steps(self, delta: float, budget: int = BURN_IN_BUDGET) -> int:
        """Steps after which ``||exp(A T)|| <= 1e-8`` by the decay envelope."""
        c, alpha = self.stable.decay_envelope()
        t = max(0.0, math.log(c / BURN_IN_TARGET) / alpha)
        steps = int(math.ceil(t / delta))
        if steps > budget:
            raise BurnInError(
                f"burn-in needs {steps} steps of size {delta:g}, budget is {budget}"
            )
        return steps

    def _jump_innovations(self, n, delta, rng):
        grid = self.driver._jump_grid(n, delta, rng)
        k = self.state_dim
        xi = np.zeros((n, k))
        if len(grid.step):
            rem = delta - grid.offset
            bj = grid.jumps @ self.b.T
            if k == 1:
                contrib = np.exp(self.a[0, 0] * rem)[:, None] * bj
            else:
                mats = scipy.linalg.expm(self.a[None, :, :] * rem[:, None, None])
                contrib = np.einsum("tij,tj->ti", mats, bj)
            np.add.at(xi, grid.step, contrib)
        xi += self.discretization(delta).drift_map @ grid.drift_rate
        return xi

    def simulate(self, n: int, delta: float, rng, *, burn_in_budget: int = BURN_IN_BUDGET,
                 impl=None) -> "SamplePath":
        """Exact draw of ``Y_delta, ..., Y_{n delta}`` from the stationary law."""
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        if not delta > 0:
            raise ValueError("delta must be positive")
        gen, seed = as_generator(rng)
        disc = self.discretization(delta)
        k = self.state_dim
        jumps = self.driver.has_jumps
        burn = self.burn_in_steps(delta, burn_in_budget) if jumps else 0
        total = n + burn
        if jumps:
            z0 = np.zeros(k)
        else:
            z0 = psd_sqrt(self.stationary_state_cov()) @ gen.standard_normal(k)
        xi = np.zeros((total, k))
        if np.any(disc.gauss_cov):
            xi += gen.standard_normal((total, k)) @ disc.gauss_factor.T
        if jumps:
            xi += self._jump_innovations(total, delta, gen)
        z = _backend.state_recursion(disc.phi, xi, z0, impl=impl)
        y = z[burn:, : self.d]
        if not np.all(np.isfinite(y)):
            raise SimulationError("simulated path contains non-finite values")
        return SamplePath(float(delta), np.ascontiguousarray(y), seed, self.model_id)


def build_model(ar, ma, driver: LevyDriver) -> McarmaModel:
    """Validate coefficients and assemble the state-space form."""
    return McarmaModel(ar, ma, driver)


def model_from_config(block: dict, path: str = "model") -> McarmaModel:
    from .errors import ConfigError

    for key in ("ar", "ma", "driver"):
        if key not in block:
            raise ConfigError(f"{path}.{key}: missing")
    driver = driver_from_config(block["driver"], f"{path}.driver")
    try:
        return build_model(block["ar"], block["ma"], driver)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class SamplePath:
    """Observations ``Y_{k delta}``, ``k = 1..n``, one row per grid point."""

    delta: float
    observations: np.ndarray
    seed: int | None = None
    model_id: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.ndim != 2 or obs.shape[0] < 1:
            raise ValueError("a path needs at least one observation")
        if not np.all(np.isfinite(obs)):
            raise ValueError("path contains non-finite values")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        self.observations = obs

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def d(self) -> int:
        return self.observations.shape[1]

    def times(self) -> np.ndarray:
        return self.delta * np.arange(1, self.n + 1)

    def to_csv(self, path) -> Path:
        path = Path(path)
        header = ["t"] + [f"y{i + 1}" for i in range(self.d)]
        rows = (
            [format(t, ".12g")] + [fmt(v) for v in row]
            for t, row in zip(self.times(), self.observations)
        )
        write_csv(path, header, rows)
        from .io import write_json

        write_json(path.with_name(path.name + ".meta.json"),
                   {"delta": self.delta, "seed": self.seed, "model_id": self.model_id, **self.meta})
        return path

    @classmethod
    def from_csv(cls, path, delta: float | None = None) -> "SamplePath":
        path = Path(path)
        meta_path = path.with_name(path.name + ".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if delta is None:
            delta = meta.get("delta")
        if delta is None:
            t = data[:, 0]
            delta = float(t[0]) if len(t) == 1 else float((t[-1]) / len(t))
        return cls(float(delta), data[:, 1:], meta.get("seed"), meta.get("model_id"))
