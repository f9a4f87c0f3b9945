"""Driving Levy processes: increment samplers and exact moment functionals.

Every driver is mean-zero (compound Poisson drivers carry the compensating
drift ``-rate * E(J) * t``) and has finite fourth moments.  The quantities
the limit theory needs are

* ``sigma_L = E(L_1 L_1^T)``
* ``upsilon = int x x^T (x) x x^T nu(dx)``, the (m^2 x m^2) jump fourth-moment
  matrix; zero for Brownian motion.

The scalar fourth cumulant ``theta = int x^4 nu(dx) = E(L_1^4) - 3 (E L_1^2)^2``
is ``upsilon`` for m = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import UnsupportedDecompositionError
from .linalg import kron, psd_sqrt, vec


def _gaussian_fourth_moment(mean, cov):
    """``E[(J (x) J)(J (x) J)^T]`` for ``J ~ N(mean, cov)`` via Isserlis with mean."""
    mu = np.asarray(mean, dtype=float)
    s = np.asarray(cov, dtype=float)
    m = mu.size
    t = (
        np.einsum("a,b,c,d->abcd", mu, mu, mu, mu)
        + np.einsum("a,b,cd->abcd", mu, mu, s)
        + np.einsum("a,c,bd->abcd", mu, mu, s)
        + np.einsum("a,d,bc->abcd", mu, mu, s)
        + np.einsum("b,c,ad->abcd", mu, mu, s)
        + np.einsum("b,d,ac->abcd", mu, mu, s)
        + np.einsum("c,d,ab->abcd", mu, mu, s)
        + np.einsum("ab,cd->abcd", s, s)
        + np.einsum("ac,bd->abcd", s, s)
        + np.einsum("ad,bc->abcd", s, s)
    )
    # (x (x) x)_{a m + b} = x_a x_b
    return t.reshape(m * m, m * m)


class JumpLaw:
    """Distribution of the jump sizes of a compound Poisson driver."""

    dim: int

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def mean(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def second_moment(self) -> np.ndarray:
        """``E(J J^T)``."""
        raise NotImplementedError

    @property
    def fourth_moment(self) -> np.ndarray:
        """``E(J J^T (x) J J^T)``."""
        raise NotImplementedError

    def expect(self, func) -> float | None:
        """Exact ``E[func(J)]`` when the law admits it, else ``None``."""
        return None

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class GaussianJumps(JumpLaw):
    mean_: np.ndarray
    cov: np.ndarray

    def __init__(self, mean, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("jump covariance must be (m, m) matching the mean")
        if np.min(np.linalg.eigvalsh(0.5 * (cov + cov.T))) < -1e-12:
            raise ValueError("jump covariance must be positive semidefinite")
        object.__setattr__(self, "mean_", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "dim", mean.size)

    def sample(self, rng, size):
        z = rng.standard_normal((size, self.dim))
        return self.mean_ + z @ psd_sqrt(self.cov).T

    @property
    def mean(self):
        return self.mean_

    @property
    def second_moment(self):
        return self.cov + np.outer(self.mean_, self.mean_)

    @property
    def fourth_moment(self):
        return _gaussian_fourth_moment(self.mean_, self.cov)

    def to_config(self):
        return {"law": "gaussian", "mean": self.mean_.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class TwoPointJumps(JumpLaw):
    """Jumps equal to ``values[0]`` with probability ``probs[0]``, else ``values[1]``."""

    values: np.ndarray
    probs: np.ndarray

    def __init__(self, values, probs):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(2, 1)
        probs = np.asarray(probs, dtype=float)
        if values.shape[0] != 2 or probs.shape != (2,):
            raise ValueError("two-point law needs two values and two probabilities")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to one")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "dim", values.shape[1])

    def sample(self, rng, size):
        pick = rng.random(size) >= self.probs[0]
        return self.values[pick.astype(np.intp)]

    def expect(self, func):
        return float(sum(p * func(v) for p, v in zip(self.probs, self.values)))

    @property
    def mean(self):
        return self.probs @ self.values

    @property
    def second_moment(self):
        return sum(p * np.outer(v, v) for p, v in zip(self.probs, self.values))

    @property
    def fourth_moment(self):
        return sum(p * np.outer(np.kron(v, v), np.kron(v, v)) for p, v in zip(self.probs, self.values))

    def to_config(self):
        return {"law": "two_point", "values": self.values.tolist(), "probs": self.probs.tolist()}


class JumpSample(NamedTuple):
    """Jumps of one interval: epochs in ``(0, dt]``, jump vectors, and the compensating drift."""

    times: np.ndarray
    jumps: np.ndarray
    drift: np.ndarray


class JumpGrid(NamedTuple):
    """Jumps on ``n`` consecutive intervals of length ``dt``.

    ``step`` is the interval index of each jump, ``offset`` its epoch within
    the interval; ``drift_rate`` is the compensating drift per unit time.
    """

    step: np.ndarray
    offset: np.ndarray
    jumps: np.ndarray
    drift_rate: np.ndarray


class NuEstimate(NamedTuple):
    value: float
    stderr: float
    exact: bool


class QuadraticForm:
    """``x -> x^T M x``; lets nu-functionals use the exact ``upsilon`` identity."""

    def __init__(self, m):
        self.m = np.atleast_2d(np.asarray(m, dtype=float))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(x @ self.m @ x)
        return np.einsum("ki,ij,kj->k", x, self.m, x)


class LevyDriver:
    """Base class.  Subclasses provide ``dim``, the moment matrices and samplers."""

    dim: int

    @property
    def sigma_L(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def gaussian_cov(self) -> np.ndarray:
        """Covariance of the Brownian part per unit time."""
        raise NotImplementedError

    @property
    def has_jumps(self) -> bool:
        raise NotImplementedError

    @property
    def upsilon(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def independent_components(self) -> bool:
        return False

    @property
    def fourth_abs_moment(self) -> float:
        """``E ||L_1||^4`` from the cumulant expansion of a mean-zero Levy law."""
        m = self.dim
        k4 = self.upsilon.reshape(m, m, m, m)
        s = self.sigma_L
        moment = (
            k4
            + np.einsum("ab,cd->abcd", s, s)
            + np.einsum("ac,bd->abcd", s, s)
            + np.einsum("ad,bc->abcd", s, s)
        )
        return float(np.einsum("aabb->", moment))

    def sample_increment(self, dt: float, rng: np.random.Generator, size: int | None = None):
        """Draw ``L_{t+dt} - L_t``; shape ``(m,)`` or ``(size, m)``."""
        if not dt > 0:
            raise ValueError(f"increment length must be positive, got {dt}")
        k = 1 if size is None else int(size)
        out = np.zeros((k, self.dim))
        g = self.gaussian_cov
        if np.any(g):
            out += rng.standard_normal((k, self.dim)) @ (np.sqrt(dt) * psd_sqrt(g)).T
        if self.has_jumps:
            grid = self._jump_grid(k, dt, rng)
            np.add.at(out, grid.step, grid.jumps)
            out += grid.drift_rate * dt
        return out[0] if size is None else out

    def sample_jumps_on_interval(self, dt: float, rng: np.random.Generator) -> JumpSample:
        if not dt > 0:
            raise ValueError(f"interval length must be positive, got {dt}")
        if np.any(self.gaussian_cov) or not self.has_jumps:
            raise UnsupportedDecompositionError(
                f"{type(self).__name__} is not a pure compound Poisson driver"
            )
        grid = self._jump_grid(1, dt, rng)
        order = np.argsort(grid.offset, kind="stable")
        return JumpSample(grid.offset[order], grid.jumps[order], grid.drift_rate * dt)

    def _jump_grid(self, n: int, dt: float, rng: np.random.Generator) -> JumpGrid:
        raise NotImplementedError

    def nu_quadratic_functional(self, g: Callable, h: Callable, mc_budget: int = 10**6,
                                rng: np.random.Generator | int | None = None) -> NuEstimate:
        """``int g(x) h(x) nu(dx)`` with a standard error (zero when exact)."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


def _nu_from_upsilon(driver, g, h):
    if isinstance(g, QuadraticForm) and isinstance(h, QuadraticForm):
        return float(vec(g.m) @ driver.upsilon @ vec(h.m))
    return None


@dataclass(frozen=True, eq=False)
class BrownianMotion(LevyDriver):
    cov: np.ndarray

    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError("Brownian covariance must be square")
        if not np.allclose(cov, cov.T, atol=1e-14):
            raise ValueError("Brownian covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(cov)) < -1e-12:
            raise ValueError("Brownian covariance must be positive semidefinite")
        if not np.any(cov):
            raise ValueError("degenerate driver: covariance is zero")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "dim", cov.shape[0])

    @property
    def sigma_L(self):
        return self.cov

    @property
    def gaussian_cov(self):
        return self.cov

    @property
    def has_jumps(self):
        return False

    @property
    def upsilon(self):
        return np.zeros((self.dim**2, self.dim**2))

    def _jump_grid(self, n, dt, rng):
        raise UnsupportedDecompositionError("Brownian motion has no jumps")

    def nu_quadratic_functional(self, g, h, mc_budget=10**6, rng=None):
        return NuEstimate(0.0, 0.0, True)

    def to_config(self):
        return {"kind": "brownian", "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class CompoundPoisson(LevyDriver):
    """Compensated compound Poisson process ``sum_{i <= N_t} J_i - rate * E(J) * t``."""

    rate: float
    law: JumpLaw

    def __init__(self, rate, law: JumpLaw):
        rate = float(rate)
        if not rate >= 0 or not np.isfinite(rate):
            raise ValueError("jump rate must be finite and nonnegative")
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "law", law)
        object.__setattr__(self, "dim", law.dim)

    @property
    def sigma_L(self):
        return self.rate * self.law.second_moment

    @property
    def gaussian_cov(self):
        return np.zeros((self.dim, self.dim))

    @property
    def has_jumps(self):
        return True

    @property
    def upsilon(self):
        return self.rate * self.law.fourth_moment

    def _jump_grid(self, n, dt, rng):
        counts = rng.poisson(self.rate * dt, size=n)
        total = int(counts.sum())
        step = np.repeat(np.arange(n), counts)
        # epochs uniform on (0, dt]
        offset = dt * (1.0 - rng.random(total))
        jumps = self.law.sample(rng, total) if total else np.zeros((0, self.dim))
        return JumpGrid(step, offset, jumps, -self.rate * self.law.mean)

    def nu_quadratic_functional(self, g, h, mc_budget=10**6, rng=None):
        exact = _nu_from_upsilon(self, g, h)
        if exact is not None:
            return NuEstimate(exact, 0.0, True)
        closed = self.law.expect(lambda x: g(x) * h(x))
        if closed is not None:
            return NuEstimate(self.rate * closed, 0.0, True)
        if mc_budget <= 0:
            raise ValueError("no closed form for this functional and mc_budget is 0")
        from .streams import as_generator

        gen, _ = as_generator(0 if rng is None else rng)
        x = self.law.sample(gen, int(mc_budget))
        vals = np.array([g(xi) * h(xi) for xi in x]) if not _vectorizable(g, h) else g(x) * h(x)
        return NuEstimate(
            self.rate * float(np.mean(vals)),
            self.rate * float(np.std(vals, ddof=1) / np.sqrt(len(vals))),
            False,
        )

    def to_config(self):
        return {"kind": "compound_poisson", "rate": self.rate, "jumps": self.law.to_config()}


def _vectorizable(g, h):
    return isinstance(g, QuadraticForm) and isinstance(h, QuadraticForm)


@dataclass(frozen=True, eq=False)
class IndependentComponents(LevyDriver):
    """Stack of independent scalar drivers; the Levy measure lives on the axes."""

    components: tuple

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("need at least one component")
        for c in components:
            if not isinstance(c, (BrownianMotion, CompoundPoisson)) or c.dim != 1:
                raise ValueError("components must be scalar Brownian or compound Poisson drivers")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "dim", len(components))

    @property
    def independent_components(self):
        return True

    @property
    def thetas(self) -> np.ndarray:
        """``theta_i = int x^4 nu_i(dx)`` per component."""
        return np.array([float(c.upsilon[0, 0]) for c in self.components])

    @property
    def sigma_L(self):
        return np.diag([float(c.sigma_L[0, 0]) for c in self.components])

    @property
    def gaussian_cov(self):
        return np.diag([float(c.gaussian_cov[0, 0]) for c in self.components])

    @property
    def has_jumps(self):
        return any(c.has_jumps for c in self.components)

    @property
    def upsilon(self):
        m = self.dim
        out = np.zeros((m * m, m * m))
        for i, theta in enumerate(self.thetas):
            e = np.zeros((m, m))
            e[i, i] = 1.0
            out += theta * kron(e, e)
        return out

    def _jump_grid(self, n, dt, rng):
        steps, offsets, jumps = [], [], []
        drift = np.zeros(self.dim)
        for i, c in enumerate(self.components):
            if not c.has_jumps:
                continue
            g = c._jump_grid(n, dt, rng)
            full = np.zeros((len(g.step), self.dim))
            full[:, i] = g.jumps[:, 0]
            steps.append(g.step)
            offsets.append(g.offset)
            jumps.append(full)
            drift[i] = g.drift_rate[0]
        if not steps:
            return JumpGrid(np.zeros(0, np.intp), np.zeros(0), np.zeros((0, self.dim)), drift)
        return JumpGrid(np.concatenate(steps), np.concatenate(offsets), np.vstack(jumps), drift)

    def nu_quadratic_functional(self, g, h, mc_budget=10**6, rng=None):
        exact = _nu_from_upsilon(self, g, h)
        if exact is not None:
            return NuEstimate(exact, 0.0, True)
        value, var, is_exact = 0.0, 0.0, True
        for i, c in enumerate(self.components):
            if not c.has_jumps:
                continue

            def axis(f, i=i):
                def lifted(x):
                    full = np.zeros(self.dim)
                    full[i] = np.asarray(x).reshape(-1)[0]
                    return f(full)
                return lifted

            est = c.nu_quadratic_functional(axis(g), axis(h), mc_budget, rng)
            value += est.value
            var += est.stderr**2
            is_exact = is_exact and est.exact
        return NuEstimate(value, float(np.sqrt(var)), is_exact)

    def to_config(self):
        return {"kind": "independent", "components": [c.to_config() for c in self.components]}


def driver_from_config(block: dict, path: str = "driver") -> LevyDriver:
    """Build a driver from its JSON configuration block."""
    from .errors import ConfigError

    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = block.get("kind")
    try:
        if kind == "brownian":
            if "cov" not in block:
                raise ConfigError(f"{path}.cov: missing")
            return BrownianMotion(block["cov"])
        if kind == "compound_poisson":
            for key in ("rate", "jumps"):
                if key not in block:
                    raise ConfigError(f"{path}.{key}: missing")
            return CompoundPoisson(block["rate"], jump_law_from_config(block["jumps"], f"{path}.jumps"))
        if kind == "independent":
            comps = block.get("components")
            if not isinstance(comps, list) or not comps:
                raise ConfigError(f"{path}.components: expected a non-empty list")
            return IndependentComponents(
                [driver_from_config(c, f"{path}.components[{i}]") for i, c in enumerate(comps)]
            )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown driver kind {kind!r} "
                      "(expected 'brownian', 'compound_poisson' or 'independent')")


def jump_law_from_config(block: dict, path: str = "jumps") -> JumpLaw:
    from .errors import ConfigError

    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    law = block.get("law")
    if law == "gaussian":
        cov = block.get("cov", [[1.0]])
        mean = block.get("mean", [0.0] * np.atleast_2d(cov).shape[0])
        return GaussianJumps(mean, cov)
    if law == "two_point":
        if "values" not in block or "probs" not in block:
            raise ConfigError(f"{path}: two_point law needs 'values' and 'probs'")
        return TwoPointJumps(block["values"], block["probs"])
    raise ConfigError(f"{path}.law: unknown jump law {law!r} (expected 'gaussian' or 'two_point')")
