"""Limit covariances of sample autocovariances of MCARMA processes.

Integrals over ``[0, inf)`` use the closed forms

    Sigma_Y(u)  = (E (x) E)(exp(A u) (x) I) K (B (x) B)
    Sigma*_Y(v) = (E (x) E)(I (x) exp(A v)) K (B (x) B),   K = -(A (+) A)^{-1}

for ``u, v >= 0`` together with ``Sigma_Y(-u) = Sigma*_Y(u)``, inside adaptive
quadrature.  Tail bounds come from the decay envelope of ``exp(A t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .levy import QuadraticForm
from .linalg import kron, kron_permutation, kron_sum, psd_sqrt, solve_kron_sum, symmetrize
from .mcarma import McarmaModel
from .quadrature import integrate_halfline, integrate_interval, integrate_real_line

DEFAULT_TOL = 1e-9
MC_FLAG_SHARE = 0.01


@dataclass
class LimitCovariance:
    """Asymptotic covariance with its fourth-moment / Gaussian decomposition."""

    lag: object
    total: np.ndarray | float
    fourth_moment_part: np.ndarray | float
    gaussian_part: np.ndarray | float
    quadrature_report: dict = field(default_factory=dict)
    flagged: bool = False

    def to_dict(self) -> dict:
        def arr(x):
            x = np.asarray(x, dtype=float)
            return x.tolist() if x.ndim else float(x)

        return {
            "lag": self.lag,
            "total": arr(self.total),
            "fourth_moment_part": arr(self.fourth_moment_part),
            "gaussian_part": arr(self.gaussian_part),
            "quadrature_report": self.quadrature_report,
            "flagged": self.flagged,
        }


class _KronForms:
    """Cached pieces of the closed forms for one model."""

    def __init__(self, model: McarmaModel):
        self.model = model
        a = model.a
        k = model.state_dim
        self.ee = kron(model.e, model.e)
        self.w = np.linalg.solve(-kron_sum(a), kron(model.b, model.b))
        self.eye = np.eye(k)
        c, alpha = model.stable.decay_envelope()
        self.alpha = alpha
        # ||Sigma_Y(u)||, ||Sigma*_Y(u)|| <= c1 exp(-alpha u) for u >= 0
        self.c1 = c * np.linalg.norm(self.ee, 2) * np.linalg.norm(self.w, 2)

    def sigma(self, u: float) -> np.ndarray:
        if u < 0:
            return self.sigma_star(-u)
        return self.ee @ kron(self.model.stable.expm(u), self.eye) @ self.w

    def sigma_star(self, v: float) -> np.ndarray:
        if v < 0:
            return self.sigma(-v)
        return self.ee @ kron(self.eye, self.model.stable.expm(v)) @ self.w


def _forms(model) -> _KronForms:
    cache = model._cache
    if "kron_forms" not in cache:
        cache["kron_forms"] = _KronForms(model)
    return cache["kron_forms"]


def sigma_y(model: McarmaModel, u: float) -> np.ndarray:
    """``Sigma_Y(u) = int_0^inf f(s + u) (x) f(s) ds``, shape ``(d^2, m^2)``."""
    return _forms(model).sigma(float(u))


def sigma_y_star(model: McarmaModel, u: float) -> np.ndarray:
    """``Sigma*_Y(u) = int_0^inf f(s) (x) f(s + u) ds`` for any real ``u``."""
    return _forms(model).sigma_star(float(u))


def _report(info) -> dict:
    return {"error": info.error, "horizon": info.horizon, "panels": info.panels}


def limit_covariance_vec(model: McarmaModel, h: float, tol: float = DEFAULT_TOL) -> LimitCovariance:
    """Asymptotic covariance of ``sqrt(n delta) vec(Gamma_hat(h) - Gamma(h))``.

    ``tol`` is relative to the magnitude bound of each integral.
    """
    h = float(h)
    if h < 0:
        raise ValueError("lag must be nonnegative")
    kf = _forms(model)
    drv = model.driver
    m = model.m
    s2 = kron(drv.sigma_L, drv.sigma_L)
    root = kron(psd_sqrt(drv.sigma_L), psd_sqrt(drv.sigma_L))
    rpr = root @ kron_permutation(m) @ root.T

    sh = kf.sigma(h)
    fourth = sh @ drv.upsilon @ sh.T

    def integrand(u):
        a = kf.sigma(u + h)
        b = kf.sigma_star(u - h)
        return np.stack([
            a @ s2 @ a.T,
            b @ s2 @ b.T,
            a @ rpr @ b.T,
            b @ rpr @ a.T,
        ])

    norm = max(np.linalg.norm(s2, 2), np.linalg.norm(rpr, 2))
    scale = kf.c1**2 * norm / (2 * kf.alpha)

    def tail(t):
        return scale * math.exp(-2 * kf.alpha * max(t - h, 0.0))

    terms, info = integrate_halfline(integrand, tail, tol * max(scale, 1e-300),
                                     breakpoints=(h,) if h > 0 else (),
                                     panel_width=max(h, 1.0 / kf.alpha) / 2,
                                     full_output=True)
    gauss = terms.sum(axis=0)
    names = ("shifted", "reflected", "cross", "cross_transposed")
    report = {n: _report(info) for n in names}
    report["tolerance"] = tol * max(scale, 1e-300)
    report["cross_asymmetry"] = float(np.max(np.abs(terms[2] - terms[3].T)))
    total = fourth + gauss
    return LimitCovariance(h, total, fourth, gauss, report)


# scalar case ---------------------------------------------------------------

def _require_scalar(model):
    if model.d != 1 or model.m != 1:
        raise ValueError("this formula needs a scalar model (d = m = 1)")


def _gamma_scalar(model):
    """``gamma(u)`` for real ``u`` and a bound ``(G, alpha)`` with ``|gamma(u)| <= G exp(-alpha |u|)``."""
    v = model.stationary_state_cov()
    ev = (model.e @ v)[0]
    e = model.e[0]

    def gamma(u):
        return float(ev @ model.stable.expm(abs(u)).T @ e)

    c, alpha = model.stable.decay_envelope()
    return gamma, c * np.linalg.norm(v, 2), alpha


def _theta_over_sigma4(model) -> float:
    s2 = float(model.driver.sigma_L[0, 0])
    return float(model.driver.upsilon[0, 0]) / (s2 * s2)


def bartlett_acvf_cov(model: McarmaModel, s: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``m_{s,t} = (theta/sigma^4) gamma(s) gamma(t) + int [gamma(u+s)gamma(u+t) + gamma(u+s)gamma(u-t)] du``.

    ``theta = int x^4 nu(dx)`` and ``sigma^2 = E(L_1^2)``.
    """
    fourth, gauss = bartlett_acvf_parts(model, s, t, tol)
    return fourth + gauss


def bartlett_acvf_parts(model: McarmaModel, s: float, t: float,
                        tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """The fourth-moment and Gaussian summands of :func:`bartlett_acvf_cov`."""
    _require_scalar(model)
    gamma, g, alpha = _gamma_scalar(model)
    s, t = float(s), float(t)

    def f(u):
        return gamma(u + s) * gamma(u + t) + gamma(u + s) * gamma(u - t)

    scale = g * g / alpha
    integral = integrate_real_line(f, lambda w: scale * math.exp(-2 * alpha * w),
                                   tol * max(scale, 1e-300), breakpoints=(-s, -t, t, 0.0))
    return _theta_over_sigma4(model) * gamma(s) * gamma(t), float(integral)


def bartlett_acf_cov(model: McarmaModel, s: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """Bartlett covariance ``v_{s,t}`` of the sample autocorrelations at lags ``s, t > 0``.

    The integrand uses ``+ rho(u - s) rho(u + t)``.
    """
    _require_scalar(model)
    s, t = float(s), float(t)
    if s <= 0 or t <= 0:
        raise ValueError("autocorrelation lags must be positive")
    gamma, g, alpha = _gamma_scalar(model)
    g0 = gamma(0.0)
    rs, rt = gamma(s) / g0, gamma(t) / g0

    def f(u):
        r0, rus, rut, rms = gamma(u) / g0, gamma(u + s) / g0, gamma(u + t) / g0, gamma(u - s) / g0
        return (rus * rut + rms * rut + 2 * rs * rt * r0 * r0
                - 2 * rs * r0 * rut - 2 * rt * r0 * rus)

    c = g / g0
    scale = 4 * c * c / alpha
    return float(integrate_real_line(f, lambda w: scale * math.exp(-2 * alpha * w),
                                     tol * max(scale, 1e-300),
                                     breakpoints=(-s, -t, s, t, 0.0)))


# cross-covariances ---------------------------------------------------------

def cross_cov_limit_var(model: McarmaModel, i: int, j: int, h: float, *,
                        tol: float = DEFAULT_TOL, mc_budget: int = 10**6,
                        rng=None) -> LimitCovariance:
    """Asymptotic variance of ``sqrt(n delta)(gamma_hat_ij(h) - gamma_ij(h))`` (1-based ``i, j``)."""
    d = model.d
    if not (1 <= i <= d and 1 <= j <= d):
        raise IndexError(f"components must lie in 1..{d}")
    h = float(h)
    if h < 0:
        raise ValueError("lag must be nonnegative")
    a = model.a
    ei = np.zeros(d)
    ei[i - 1] = 1.0
    ej = np.zeros(d)
    ej[j - 1] = 1.0
    # X = int exp(A^T s) E^T e_i e_j^T E exp(A s) ds
    x = solve_kron_sum(a.T, model.e.T @ np.outer(ei, ej) @ model.e)
    mmat = symmetrize(model.b.T @ x @ model.stable.expm(h) @ model.b)
    drv = model.driver
    if drv.independent_components:
        nu_value = float(np.sum(drv.thetas * np.diag(mmat) ** 2))
        nu_err, nu_exact = 0.0, True
    else:
        est = drv.nu_quadratic_functional(QuadraticForm(mmat), QuadraticForm(mmat), mc_budget, rng)
        nu_value, nu_err, nu_exact = est.value, est.stderr, est.exact

    c, alpha = model.stable.decay_envelope()
    g = c * np.linalg.norm(model.stationary_state_cov(), 2)

    def f(s):
        gs = model.acvf(s)
        return 2.0 * (gs[i - 1, i - 1] * gs[j - 1, j - 1]
                      + model.acvf(s + h)[i - 1, j - 1] * model.acvf(s - h)[j - 1, i - 1])

    scale = 2 * g * g / alpha
    gauss, info = integrate_halfline(
        f, lambda t: scale * math.exp(-2 * alpha * max(t - h, 0.0)),
        tol * max(scale, 1e-300), breakpoints=(h,) if h > 0 else (), full_output=True)
    gauss = float(gauss)
    flagged = (not nu_exact) and nu_err >= MC_FLAG_SHARE * abs(gauss)
    report = {"gaussian": _report(info), "nu_stderr": nu_err, "nu_exact": nu_exact}
    return LimitCovariance(h, nu_value + gauss, nu_value, gauss, report, flagged)


# fixed-step comparison -----------------------------------------------------

@dataclass(frozen=True)
class FixedDeltaVariance:
    """Fixed-step variance ``bracket`` and its ``delta``-scaled value."""

    delta: float
    bracket: float
    scaled: float
    fourth_term: float
    lag0_term: float
    series_term: float
    terms: int


def fixed_delta_discrete_variance(model: McarmaModel, delta: float,
                                  tol: float = DEFAULT_TOL) -> FixedDeltaVariance:
    """Asymptotic variance of ``n^{-1/2} sum_k (Y_{k delta}^2 - gamma(0))`` at fixed ``delta``.

    ``bracket = theta int_0^delta f_delta(u)^2 du + 2 gamma(0)^2 + 4 sum_{k>=1} gamma(k delta)^2``
    with ``f_delta(u) = sum_{k>=0} f(u + k delta)^2``; series stop once
    ``c exp(-alpha k delta) < 1e-12``.
    """
    _require_scalar(model)
    delta = float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    c, alpha = model.stable.decay_envelope()
    kmax = max(1, int(math.ceil(math.log(c / 1e-12) / (alpha * delta))))
    phi = model.stable.expm(delta)
    # rows: Phi^k B for k = 0..kmax
    pb = np.empty((kmax + 1, model.state_dim))
    cur = model.b[:, 0].copy()
    for k in range(kmax + 1):
        pb[k] = cur
        cur = phi @ cur
    e = model.e[0]
    theta = float(model.driver.upsilon[0, 0])

    def f_delta(u):
        vals = pb @ (model.stable.expm(u).T @ e)
        return math.fsum(vals * vals)

    fourth = 0.0
    if theta != 0.0:
        fourth = theta * float(integrate_interval(lambda u: f_delta(u) ** 2, 0.0, delta, tol))
    v = model.stationary_state_cov()
    ev = model.e @ v
    # gamma(k delta) = E V (Phi^T)^k E^T
    gk = np.empty(kmax + 1)
    row = ev[0].copy()
    for k in range(kmax + 1):
        gk[k] = row @ e
        row = row @ phi.T
    lag0 = 2.0 * gk[0] ** 2
    series = 4.0 * math.fsum(gk[1:] ** 2)
    bracket = fourth + lag0 + series
    return FixedDeltaVariance(delta, bracket, delta * bracket, fourth, lag0, series, kmax)


def high_frequency_variance_limit(model: McarmaModel) -> float:
    """``(theta/sigma^4) gamma(0)^2 + 4 int_0^inf gamma(s)^2 ds`` in closed form."""
    _require_scalar(model)
    v = model.stationary_state_cov()
    w = (model.e @ v)[0]
    e = model.e[0]
    at = model.a.T
    # int_0^inf (w exp(A^T s) e)^2 ds
    sol = np.linalg.solve(-kron_sum(at), np.kron(e, e))
    integral = float(np.kron(w, w) @ sol)
    g0 = float(w @ e)
    return _theta_over_sigma4(model) * g0 * g0 + 4.0 * integral
