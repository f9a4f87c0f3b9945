"""Discrete-time multivariate moving averages ``Y_k = sum_j C_j xi_{k-j}``.

Infinite sequences are represented by finite truncations ``C_0..C_J``.  The
second-order and limit-covariance formulas are exact for the truncation.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .linalg import kron, kron_permutation, psd_sqrt, symmetrize, vec
from .streams import as_generator


class Noise:
    """IID mean-zero noise with finite fourth moments."""

    dim: int
    sigma: np.ndarray
    upsilon_star: np.ndarray
    upsilon_star_stderr: float = 0.0

    def sample(self, rng, size: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def eta(self) -> float:
        """Scalar kurtosis ``E(xi^4) / sigma^4``."""
        if self.dim != 1:
            raise ValueError("kurtosis is defined for scalar noise only")
        s2 = float(self.sigma[0, 0])
        return (float(self.upsilon_star[0, 0]) + s2 * s2) / (s2 * s2)

    def to_config(self) -> dict:
        raise NotImplementedError


class GaussianNoise(Noise):
    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape[0] != cov.shape[1] or np.min(np.linalg.eigvalsh(symmetrize(cov))) < -1e-12:
            raise ValueError("noise covariance must be square PSD")
        self.dim = cov.shape[0]
        self.sigma = cov
        self._factor = psd_sqrt(cov)
        m = self.dim
        self.upsilon_star = (np.eye(m * m) + kron_permutation(m)) @ kron(cov, cov)

    def sample(self, rng, size):
        return rng.standard_normal((size, self.dim)) @ self._factor.T

    def to_config(self):
        return {"law": "gaussian", "cov": self.sigma.tolist()}


class TwoPointNoise(Noise):
    """Noise taking ``values[0]`` with probability ``probs[0]``, else ``values[1]``; mean zero."""

    def __init__(self, values, probs):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(2, 1)
        probs = np.asarray(probs, dtype=float)
        if values.shape[0] != 2 or probs.shape != (2,):
            raise ValueError("two-point noise needs two values and two probabilities")
        if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to one")
        if np.max(np.abs(probs @ values)) > 1e-12 * max(1.0, np.abs(values).max()):
            raise ValueError("two-point noise must have mean zero")
        self.values, self.probs = values, probs
        self.dim = values.shape[1]
        self.sigma = sum(p * np.outer(v, v) for p, v in zip(probs, values))
        fourth = sum(p * np.outer(np.kron(v, v), np.kron(v, v)) for p, v in zip(probs, values))
        self.upsilon_star = fourth - np.outer(vec(self.sigma), vec(self.sigma))

    def sample(self, rng, size):
        return self.values[(rng.random(size) >= self.probs[0]).astype(np.intp)]

    def to_config(self):
        return {"law": "two_point", "values": self.values.tolist(), "probs": self.probs.tolist()}


class EmpiricalNoise(Noise):
    """Noise given only by a sampler; moments estimated from ``draws`` samples."""

    def __init__(self, sampler, dim: int, draws: int = 10**6, seed: int = 0):
        self._sampler = sampler
        self.dim = int(dim)
        x = np.asarray(sampler(as_generator(seed)[0], int(draws)), dtype=float).reshape(-1, self.dim)
        self.sigma = symmetrize(x.T @ x / len(x))
        xx = np.einsum("ka,kb->kab", x, x).reshape(len(x), -1)
        self.upsilon_star = xx.T @ xx / len(x) - np.outer(vec(self.sigma), vec(self.sigma))
        dev = np.einsum("ki,ki->k", xx, xx)
        self.upsilon_star_stderr = float(np.std(dev, ddof=1) / math.sqrt(len(x)))

    def sample(self, rng, size):
        return np.asarray(self._sampler(rng, size), dtype=float).reshape(size, self.dim)

    def to_config(self):
        raise TypeError("empirical noise has no configuration form")


class MaModel:
    """Finite moving average with coefficients ``C_0..C_J`` and iid noise."""

    def __init__(self, coeffs, noise: Noise, tail_bound: float = 0.0):
        cs = [np.atleast_2d(np.asarray(c, dtype=float)) for c in coeffs]
        if not cs:
            raise ValueError("need at least one coefficient")
        m = noise.dim
        for j, c in enumerate(cs):
            if c.shape != (m, m):
                raise ValueError(f"coeffs[{j}] has shape {c.shape}, expected {(m, m)}")
        self.coeffs = np.stack(cs)
        self.noise = noise
        self.m = m
        self.tail_bound = float(tail_bound)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> np.ndarray:
        if 0 <= j <= self.order:
            return self.coeffs[j]
        return np.zeros((self.m, self.m))

    def to_config(self) -> dict:
        return {"type": "ma", "coeffs": self.coeffs.tolist(), "noise": self.noise.to_config()}

    @property
    def model_id(self) -> str:
        from .mcarma import _model_id

        return _model_id(self.to_config())

    @classmethod
    def from_varma(cls, ar, ma, noise: Noise, order: int) -> "MaModel":
        """Materialize ``Phi(B) Y = Theta(B) xi`` with ``Theta_0 = I`` to ``order`` terms.

        ``ar`` lists ``Phi_1..Phi_p`` and ``ma`` lists ``Theta_1..Theta_q``;
        the reported tail bound is ``sum_{j > order} ||C_j||`` over the next
        200 terms of the recursion.
        """
        m = noise.dim
        phi = [np.atleast_2d(np.asarray(x, dtype=float)) for x in ar]
        theta = [np.atleast_2d(np.asarray(x, dtype=float)) for x in ma]
        cs = [np.eye(m)]
        extra = max(order, 0) + 200
        for j in range(1, extra + 1):
            c = theta[j - 1].copy() if j <= len(theta) else np.zeros((m, m))
            for i, p in enumerate(phi, start=1):
                if j - i >= 0:
                    c = c + p @ cs[j - i]
            cs.append(c)
        tail = float(sum(np.linalg.norm(c, 2) for c in cs[order + 1:]))
        return cls(cs[: order + 1], noise, tail_bound=tail)


def ma_acvf(model: MaModel, h: int) -> np.ndarray:
    """``Gamma(h) = E(Y_0 Y_h^T) = sum_j C_j Sigma C_{j+h}^T``; negative lags transpose."""
    h = int(h)
    if h < 0:
        return ma_acvf(model, -h).T
    s = model.noise.sigma
    out = np.zeros((model.m, model.m))
    for j in range(0, model.order - h + 1):
        out += model.coeffs[j] @ s @ model.coeffs[j + h].T
    return symmetrize(out) if h == 0 else out


def ma_simulate(model: MaModel, n: int, rng) -> np.ndarray:
    """Draw ``Y_1..Y_n``; noise ``xi_{1-J}..xi_n`` is sampled in one block."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    gen, _ = as_generator(rng)
    J = model.order
    xi = model.noise.sample(gen, n + J)
    y = np.zeros((n, model.m))
    for j in range(J + 1):
        y += xi[J - j:J - j + n] @ model.coeffs[j].T
    return y


def _sigma_r(model: MaModel, r: int, star: bool = False) -> np.ndarray:
    """``Sigma_r = sum_j C_{j+r} (x) C_j``; ``star`` gives ``sum_j C_j (x) C_{j+r}``."""
    m = model.m
    c = model.coeffs
    lo = max(0, -r)
    hi = min(model.order, model.order - r)  # last j with j, j + r <= J
    if hi < lo:
        return np.zeros((m * m, m * m))
    lead, lag = c[lo + r:hi + r + 1], c[lo:hi + 1]
    first, second = (lag, lead) if star else (lead, lag)
    # kron(X, Y)[a*m + c, b*m + d] = X[a, b] Y[c, d]
    return np.einsum("jab,jcd->acbd", first, second).reshape(m * m, m * m)


def ma_limit_covariance_vec(model: MaModel, h: int):
    """Asymptotic covariance of ``sqrt(n) vec(Gamma_hat(h) - Gamma(h))``.

    Returns ``(total, fourth_moment_part, gaussian_part)``.
    """
    h = int(h)
    if h < 0:
        raise ValueError("lag must be nonnegative")
    m = model.m
    s = model.noise.sigma
    s2 = kron(s, s)
    root = kron(psd_sqrt(s), psd_sqrt(s))
    rpr = root @ kron_permutation(m) @ root.T
    sh = _sigma_r(model, h)
    fourth = sh @ model.noise.upsilon_star @ sh.T
    gauss = np.zeros((m * m, m * m))
    for r in range(1, model.order + h + 1):
        a = _sigma_r(model, r + h)
        b = _sigma_r(model, r - h, star=True)
        gauss += a @ s2 @ a.T + b @ s2 @ b.T + a @ rpr @ b.T + b @ rpr @ a.T
    return fourth + gauss, fourth, gauss


def _scalar(model: MaModel):
    if model.m != 1:
        raise ValueError("this formula needs a scalar model")
    g = np.array([ma_acvf(model, k)[0, 0] for k in range(model.order + 1)])

    def gamma(k):
        k = abs(int(k))
        return g[k] if k <= model.order else 0.0

    return gamma


def ma_bartlett_acvf_cov(model: MaModel, s: int, t: int) -> float:
    """``m_{s,t} = (eta - 3) gamma(s) gamma(t) + sum_k [gamma(k+s)gamma(k+t) + gamma(k+s)gamma(k-t)]``."""
    gamma = _scalar(model)
    span = model.order + abs(s) + abs(t) + 1
    terms = [gamma(k + s) * gamma(k + t) + gamma(k + s) * gamma(k - t) for k in range(-span, span + 1)]
    return (model.noise.eta - 3.0) * gamma(s) * gamma(t) + math.fsum(terms)


def ma_bartlett_acf_cov(model: MaModel, s: int, t: int) -> float:
    """Bartlett covariance ``v_{s,t}`` of the sample autocorrelations at lags ``s, t > 0``."""
    if s <= 0 or t <= 0:
        raise ValueError("autocorrelation lags must be positive")
    gamma = _scalar(model)
    g0 = gamma(0)

    def rho(k):
        return gamma(k) / g0

    span = model.order + s + t + 1
    rs, rt = rho(s), rho(t)
    terms = [
        rho(u + s) * rho(u + t) + rho(u - s) * rho(u + t) + 2 * rs * rt * rho(u) ** 2
        - 2 * rs * rho(u) * rho(u + t) - 2 * rt * rho(u) * rho(u + s)
        for u in range(-span, span + 1)
    ]
    return math.fsum(terms)


def noise_from_config(block: dict, path: str = "noise") -> Noise:
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    law = block.get("law")
    try:
        if law == "gaussian":
            return GaussianNoise(block.get("cov", [[1.0]]))
        if law == "two_point":
            return TwoPointNoise(block["values"], block["probs"])
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}: missing") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.law: unknown noise law {law!r} (expected 'gaussian' or 'two_point')")


def ma_model_from_config(block: dict, path: str = "model") -> MaModel:
    if "noise" not in block:
        raise ConfigError(f"{path}.noise: missing")
    noise = noise_from_config(block["noise"], f"{path}.noise")
    try:
        if "coeffs" in block:
            return MaModel(block["coeffs"], noise)
        if "varma" in block:
            v = block["varma"]
            return MaModel.from_varma(v.get("ar", []), v.get("ma", []), noise, int(v["order"]))
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.coeffs: missing")

