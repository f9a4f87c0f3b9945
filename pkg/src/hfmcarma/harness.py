"""Replicated Monte Carlo experiments for the sample-autocovariance CLTs.

Replication ``r`` at schedule point ``k`` draws from stream
``(base_seed, k, r)``; results are assembled in replication order, so a
report does not depend on the number of worker threads.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import asymptotics as asy
from .errors import SimulationError
from .estimators import LagSet, sample_acvf
from .ma import (
    MaModel,
    ma_acvf,
    ma_bartlett_acf_cov,
    ma_bartlett_acvf_cov,
    ma_limit_covariance_vec,
    ma_simulate,
)
from .mcarma import McarmaModel
from .streams import check_seed, stream

DEFAULT_REPLICATIONS = 2000
DEFAULT_TOLERANCE = 0.10
CROSS_TOLERANCE = 0.15
MIN_DIAGNOSTIC_N = 200
DIAGNOSTIC_BAND = 4.0


def _parse_statistic(statistic):
    if statistic in ("acvf", "acf"):
        return statistic, None
    if isinstance(statistic, (tuple, list)) and len(statistic) == 3 and statistic[0] == "cross":
        return "cross", (int(statistic[1]), int(statistic[2]))
    if isinstance(statistic, dict) and "cross" in statistic:
        i, j = statistic["cross"]
        return "cross", (int(i), int(j))
    raise ValueError(f"unknown statistic {statistic!r}; expected 'acvf', 'acf' or ('cross', i, j)")


@dataclass
class ExperimentSpec:
    """What to simulate, at which ``(n, delta)`` points, and which statistic to check."""

    model: McarmaModel | MaModel
    schedule: list
    lags: list
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = 0
    statistic: object = "acvf"
    tolerance: float | None = None
    truth_override: float | None = None
    threads: int = 1

    def __post_init__(self):
        self.kind, self.pair = _parse_statistic(self.statistic)
        self.discrete = isinstance(self.model, MaModel)
        sched = []
        for k, point in enumerate(self.schedule):
            if self.discrete and np.isscalar(point):
                point = (point, 1)
            n, delta = int(point[0]), float(point[1])
            if n < 2 or not delta > 0:
                raise ValueError(f"schedule[{k}]: need n >= 2 and delta > 0")
            if self.discrete and delta != 1.0:
                raise ValueError(f"schedule[{k}]: a discrete-time model needs delta = 1")
            sched.append((n, delta))
        if not sched:
            raise ValueError("schedule is empty")
        self.schedule = sched
        self.lags = sorted({float(h) for h in self.lags})
        if not self.lags:
            raise ValueError("no lags given")
        if self.kind == "acf":
            if self.lags[0] <= 0:
                raise ValueError("autocorrelation lags must be positive")
        self.replications = int(self.replications)
        if self.replications < MIN_DIAGNOSTIC_N:
            raise ValueError(
                f"replications={self.replications}: at least {MIN_DIAGNOSTIC_N} are needed "
                "for the normality diagnostics"
            )
        self.base_seed = check_seed(self.base_seed)
        if self.tolerance is None:
            self.tolerance = CROSS_TOLERANCE if self.kind == "cross" else DEFAULT_TOLERANCE
        dim = self.model.m if self.discrete else self.model.d
        if self.kind in ("acf",) and dim != 1:
            raise ValueError("the acf statistic needs a scalar model")
        if self.kind == "cross":
            i, j = self.pair
            if not (1 <= i <= dim and 1 <= j <= dim):
                raise ValueError(f"cross components must lie in 1..{dim}")
        for n, delta in self.schedule:
            ls = LagSet(delta, self.lags)
            ls.check(n)

    @property
    def dim(self) -> int:
        return self.model.m if self.discrete else self.model.d


@dataclass
class PointResult:
    n: int
    delta: float
    scale: float
    truth: np.ndarray
    theoretical: np.ndarray
    empirical: np.ndarray
    centered_cov: np.ndarray
    mean_error: np.ndarray
    ratio: np.ndarray
    diagnostics: dict
    abs_error_median: np.ndarray
    errors: np.ndarray = field(repr=False, default=None)


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    coordinates: list
    points: list
    passed: bool
    band: list
    runtime: float = 0.0

    def to_dict(self) -> dict:
        """JSON form; ``runtime`` is left out so the output is byte-stable."""
        s = self.spec
        return {
            "model_id": s.model.model_id,
            "model": s.model.to_config(),
            "statistic": s.kind if s.pair is None else {"cross": list(s.pair)},
            "lags": s.lags,
            "replications": s.replications,
            "base_seed": s.base_seed,
            "tolerance": s.tolerance,
            "truth_override": s.truth_override,
            "coordinates": self.coordinates,
            "passed": self.passed,
            "band": self.band,
            "points": [
                {
                    "n": p.n,
                    "delta": p.delta,
                    "scale": p.scale,
                    "truth": p.truth,
                    "theoretical": p.theoretical,
                    "empirical": p.empirical,
                    "centered_covariance": p.centered_cov,
                    "mean_error": p.mean_error,
                    "ratio": p.ratio,
                    "abs_error_median": p.abs_error_median,
                    "diagnostics": p.diagnostics,
                }
                for p in self.points
            ],
        }

    def rows(self):
        """``(schedule_idx, lag_i, lag_j, empirical, theoretical, ratio)``."""
        for k, p in enumerate(self.points):
            for a, ca in enumerate(self.coordinates):
                for b, cb in enumerate(self.coordinates):
                    yield (k, ca, cb, float(p.empirical[a, b]), float(p.theoretical[a, b]),
                           float(p.ratio[a, b]))


def _coordinates(spec: ExperimentSpec):
    """Coordinate labels: the lag, or ``lag:i:j`` in vec order for multivariate acvf."""
    d = spec.dim
    lag_fmt = [format(h, ".12g") for h in spec.lags]
    if spec.kind != "acvf" or d == 1:
        return lag_fmt
    return [f"{lf}:{i + 1}:{j + 1}" for lf in lag_fmt for j in range(d) for i in range(d)]


def _acvf(spec, h):
    if spec.discrete:
        return ma_acvf(spec.model, int(round(h)))
    return spec.model.acvf(h)


def _truth(spec) -> np.ndarray:
    if spec.truth_override is not None:
        return np.full(len(_coordinates(spec)), float(spec.truth_override))
    if spec.kind == "acf":
        g0 = _acvf(spec, 0.0)[0, 0]
        return np.array([_acvf(spec, h)[0, 0] / g0 for h in spec.lags])
    if spec.kind == "cross":
        i, j = spec.pair
        return np.array([_acvf(spec, h)[i - 1, j - 1] for h in spec.lags])
    return np.concatenate([_acvf(spec, h).reshape(-1, order="F") for h in spec.lags])


def _theory(spec) -> np.ndarray:
    lags = spec.lags
    model = spec.model
    k = len(_coordinates(spec))
    out = np.full((k, k), np.nan)
    d = spec.dim
    if spec.kind == "acf":
        f = (lambda s, t: ma_bartlett_acf_cov(model, int(round(s)), int(round(t)))) if spec.discrete \
            else (lambda s, t: asy.bartlett_acf_cov(model, s, t))
        for a, s in enumerate(lags):
            for b, t in enumerate(lags[a:], start=a):
                out[a, b] = out[b, a] = f(s, t)
        return out
    if spec.kind == "cross":
        i, j = spec.pair
        for a, h in enumerate(lags):
            if spec.discrete:
                out[a, a] = ma_limit_covariance_vec(model, int(round(h)))[0][(j - 1) * d + i - 1,
                                                                            (j - 1) * d + i - 1]
            else:
                out[a, a] = asy.cross_cov_limit_var(model, i, j, h).total
        return out
    if d == 1:
        f = (lambda s, t: ma_bartlett_acvf_cov(model, int(round(s)), int(round(t)))) if spec.discrete \
            else (lambda s, t: asy.bartlett_acvf_cov(model, s, t))
        for a, s in enumerate(lags):
            for b, t in enumerate(lags[a:], start=a):
                out[a, b] = out[b, a] = f(s, t)
        return out
    for a, h in enumerate(lags):
        if spec.discrete:
            block = ma_limit_covariance_vec(model, int(round(h)))[0]
        else:
            block = asy.limit_covariance_vec(model, h).total
        sl = slice(a * d * d, (a + 1) * d * d)
        out[sl, sl] = block
    return out


def _replicate(spec: ExperimentSpec, k: int, r: int, n: int, delta: float, lagset: LagSet):
    rng = stream(spec.base_seed, k, r)
    try:
        if spec.discrete:
            y = ma_simulate(spec.model, n, rng)
        else:
            y = spec.model.simulate(n, delta, rng).observations
        if spec.kind == "acf":
            steps = sorted(set(lagset.steps) | {0})
            est = sample_acvf(y, LagSet.from_steps(delta, steps), True, delta=delta)
            g0 = est.gamma_hat[0][0, 0]
            return np.array([est.gamma_hat[s][0, 0] / g0 for s in lagset.steps])
        est = sample_acvf(y, lagset, True, delta=delta)
        if spec.kind == "cross":
            i, j = spec.pair
            return np.array([est.gamma_hat[s][i - 1, j - 1] for s in lagset.steps])
        return np.concatenate([est.gamma_hat[s].reshape(-1, order="F") for s in lagset.steps])
    except Exception as exc:
        raise SimulationError(
            f"replication {r} at schedule point {k} (stream ({spec.base_seed}, {k}, {r})) failed: {exc}"
        ) from exc


def normality_diagnostics(errors, theoretical_sd=None) -> dict:
    """Sample skewness and excess kurtosis per coordinate with their null z-scores.

    Coordinates are divided by ``theoretical_sd`` (default: the sample
    standard deviation) before the moments are taken.
    """
    x = np.asarray(errors, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < MIN_DIAGNOSTIC_N:
        raise ValueError(f"normality diagnostics need at least {MIN_DIAGNOSTIC_N} rows, got {n}")
    sd = np.std(x, axis=0, ddof=1) if theoretical_sd is None else np.asarray(theoretical_sd, float)
    sd = np.broadcast_to(sd, (x.shape[1],))
    if np.any(~(sd > 0)) or np.any(np.ptp(x, axis=0) == 0):
        raise ValueError("a coordinate has zero variance; standardized moments are undefined")
    z = x / sd
    skew = stats.skew(z, axis=0, bias=True)
    kurt = stats.kurtosis(z, axis=0, fisher=True, bias=True)
    z_skew = skew / math.sqrt(6.0 / n)
    z_kurt = kurt / math.sqrt(24.0 / n)
    ok = bool(np.all(np.abs(z_skew) < DIAGNOSTIC_BAND) and np.all(np.abs(z_kurt) < DIAGNOSTIC_BAND))
    return {
        "skewness": skew.tolist(),
        "excess_kurtosis": kurt.tolist(),
        "z_skewness": z_skew.tolist(),
        "z_excess_kurtosis": z_kurt.tolist(),
        "band": DIAGNOSTIC_BAND,
        "passed": ok,
    }


def run_experiment(spec: ExperimentSpec, threads: int | None = None,
                   keep_errors: bool = False) -> ExperimentReport:
    """Simulate, estimate and compare against the limit covariance at every schedule point."""
    start = time.perf_counter()
    threads = max(1, int(spec.threads if threads is None else threads))
    coords = _coordinates(spec)
    truth = _truth(spec)
    theory = _theory(spec)
    diag_sd = np.sqrt(np.diag(theory))
    points = []
    for k, (n, delta) in enumerate(spec.schedule):
        lagset = LagSet(delta, spec.lags)
        jobs = range(spec.replications)
        if threads == 1:
            est = [_replicate(spec, k, r, n, delta, lagset) for r in jobs]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                est = list(pool.map(lambda r: _replicate(spec, k, r, n, delta, lagset), jobs))
        est = np.vstack(est)
        raw = est - truth
        scale = float(n) if spec.discrete else n * delta
        err = math.sqrt(scale) * raw
        empirical = err.T @ err / len(err)
        centered = np.atleast_2d(np.cov(err, rowvar=False, ddof=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = empirical / theory
        diags = normality_diagnostics(err, diag_sd)
        points.append(PointResult(
            n, delta, scale, truth, theory, empirical, centered, err.mean(axis=0), ratio, diags,
            np.median(np.abs(raw), axis=0), err if keep_errors else None,
        ))
    last = np.diag(points[-1].ratio)
    lo, hi = 1.0 - spec.tolerance, 1.0 + spec.tolerance
    passed = bool(np.all((last >= lo) & (last <= hi)))
    return ExperimentReport(spec, coords, points, passed, [lo, hi], time.perf_counter() - start)


@dataclass
class RateReport:
    scales: list
    median_abs_error: list
    ratios: list
    slope: float
    passed: bool
    last_closest: bool
    window: tuple = (-0.6, -0.4)

    def to_dict(self) -> dict:
        return {
            "scales": self.scales,
            "median_abs_error": self.median_abs_error,
            "ratios": self.ratios,
            "slope": self.slope,
            "window": list(self.window),
            "passed": self.passed,
            "last_closest": self.last_closest,
        }


def rate_verification(spec_or_report, threads: int | None = None, coordinate: int = 0) -> RateReport:
    """Log-log slope of the median unscaled error against ``n delta`` (``n`` for MA)."""
    if isinstance(spec_or_report, ExperimentReport):
        report = spec_or_report
    else:
        spec = spec_or_report
        if len(spec.schedule) < 3:
            raise ValueError(f"rate verification needs at least 3 schedule points, got {len(spec.schedule)}")
        report = run_experiment(spec, threads)
    spec = report.spec
    if len(report.points) < 3:
        raise ValueError(f"rate verification needs at least 3 schedule points, got {len(report.points)}")
    scales = [p.scale for p in report.points]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("the schedule must have increasing n * delta")
    if not spec.discrete and any(b[1] > a[1] for a, b in zip(spec.schedule, spec.schedule[1:])):
        raise ValueError("the schedule must have non-increasing delta")
    med = np.array([p.abs_error_median[coordinate] for p in report.points])
    if not np.all(med > 0):
        raise ValueError("median error is zero at some schedule point; the slope is undefined")
    slope = float(np.polyfit(np.log(scales), np.log(med), 1)[0])
    ratios = [float(p.ratio[coordinate, coordinate]) for p in report.points]
    dev = [abs(r - 1.0) for r in ratios]
    window = (-0.6, -0.4)
    return RateReport(scales, med.tolist(), ratios, slope,
                      window[0] <= slope <= window[1], dev[-1] == min(dev), window)
