from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfmcarma.errors import ConfigError, UnsupportedDecompositionError
from hfmcarma.levy import (
    BrownianMotion,
    CompoundPoisson,
    GaussianJumps,
    IndependentComponents,
    QuadraticForm,
    TwoPointJumps,
    driver_from_config,
)
from hfmcarma.streams import stream


def cp2():
    return CompoundPoisson(2.0, GaussianJumps([0.0], [[1.0]]))


def test_brownian_increment_mean():
    drv = BrownianMotion(np.eye(2))
    x = drv.sample_increment(1.0, stream(1), size=10**5)
    assert x.shape == (10**5, 2)
    assert np.all(np.abs(x.mean(axis=0)) < 4e-2 * math.sqrt(2))


def test_increment_rejects_nonpositive_duration():
    with pytest.raises(ValueError):
        cp2().sample_increment(0.0, stream(0))


def test_tiny_duration_mostly_zero():
    x = cp2().sample_increment(1e-12, stream(2), size=1000)
    assert np.max(np.abs(x)) < 1e-9


def test_compound_poisson_variance():
    x = cp2().sample_increment(1.0, stream(3), size=10**5)[:, 0]
    assert abs(x.var() - 2.0) < 0.05 * 2.0
    # mean-compensated: E(L_1) = 0 even with a nonzero jump mean
    y = CompoundPoisson(1.5, GaussianJumps([1.0], [[0.5]])).sample_increment(1.0, stream(4), 10**5)
    sd = math.sqrt(1.5 * 1.5)
    assert abs(y.mean()) < 4 * sd / math.sqrt(10**5)


def test_single_draw_shape():
    assert BrownianMotion([[1.0]]).sample_increment(0.5, stream(0)).shape == (1,)


def test_degenerate_driver_rejected():
    with pytest.raises(ValueError):
        BrownianMotion([[0.0]])
    with pytest.raises(ValueError):
        BrownianMotion([[1.0, 2.0], [2.0, 1.0]])


def test_jumps_on_interval_empty():
    js = CompoundPoisson(0.0, GaussianJumps([0.0], [[1.0]])).sample_jumps_on_interval(1.0, stream(0))
    assert len(js.times) == 0 and js.jumps.shape == (0, 1)
    np.testing.assert_array_equal(js.drift, [0.0])


def test_jump_count_mean():
    drv = CompoundPoisson(3.0, GaussianJumps([0.0], [[1.0]]))
    rng = stream(5)
    counts = []
    for _ in range(10**4):
        js = drv.sample_jumps_on_interval(2.0, rng)
        assert np.all((js.times > 0) & (js.times <= 2.0))
        assert np.all(np.diff(js.times) >= 0)
        counts.append(len(js.times))
    assert abs(np.mean(counts) - 6.0) < 0.25


def test_jump_decomposition_matches_increment():
    drv = CompoundPoisson(2.0, TwoPointJumps([1.0, -0.5], [0.3, 0.7]))
    rng = stream(6)
    a = np.array([js.jumps.sum(axis=0) + js.drift
                  for js in (drv.sample_jumps_on_interval(0.5, rng) for _ in range(20000))])[:, 0]
    b = drv.sample_increment(0.5, stream(7), size=20000)[:, 0]
    sd = math.sqrt(0.5 * float(drv.sigma_L[0, 0]))
    assert abs(a.mean() - b.mean()) < 4 * sd * math.sqrt(2 / 20000)
    assert abs(a.var() / b.var() - 1) < 0.1


def test_brownian_has_no_jump_decomposition():
    with pytest.raises(UnsupportedDecompositionError):
        BrownianMotion([[1.0]]).sample_jumps_on_interval(1.0, stream(0))
    mixed = IndependentComponents([BrownianMotion([[1.0]]), cp2()])
    with pytest.raises(UnsupportedDecompositionError):
        mixed.sample_jumps_on_interval(1.0, stream(0))


def test_upsilon_values():
    assert np.array_equal(BrownianMotion(np.eye(3)).upsilon, np.zeros((9, 9)))
    assert cp2().upsilon[0, 0] == pytest.approx(6.0)
    ind = IndependentComponents([cp2(), BrownianMotion([[1.0]])])
    e1, e2 = np.eye(2)
    expected = 6.0 * np.kron(np.outer(e1, e1), np.outer(e1, e1))
    np.testing.assert_allclose(ind.upsilon, expected)
    np.testing.assert_allclose(ind.thetas, [6.0, 0.0])


def test_upsilon_matches_jump_enumeration():
    vals = np.array([[1.0, -2.0], [-0.5, 1.0]])
    drv = CompoundPoisson(1.7, TwoPointJumps(vals, [0.4, 0.6]))
    ref = sum(p * np.outer(np.kron(np.outer(v, v).ravel(order="F"), 1),
                           np.outer(v, v).ravel(order="F"))
              for p, v in zip([0.4, 0.6], vals)) * 1.7
    np.testing.assert_allclose(drv.upsilon, ref, atol=1e-13)
    assert np.min(np.linalg.eigvalsh(drv.upsilon)) > -1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3), st.floats(0.1, 5))
def test_gaussian_fourth_moment_scalar(mu, var, rate):
    # E J^4 for N(mu, var) is mu^4 + 6 mu^2 var + 3 var^2
    drv = CompoundPoisson(rate, GaussianJumps([mu], [[var]]))
    ref = rate * (mu**4 + 6 * mu * mu * var + 3 * var * var)
    assert drv.upsilon[0, 0] == pytest.approx(ref, rel=1e-12)
    assert drv.sigma_L[0, 0] == pytest.approx(rate * (var + mu * mu), rel=1e-12)


def test_gaussian_fourth_moment_vector_mc():
    drv = CompoundPoisson(1.0, GaussianJumps([0.3, -0.2], [[1.0, 0.4], [0.4, 0.5]]))
    j = drv.law.sample(stream(8), 400000)
    jj = np.einsum("ka,kb->kab", j, j).reshape(len(j), -1)
    mc = jj.T @ jj / len(j)
    np.testing.assert_allclose(drv.upsilon, mc, atol=0.06)


def test_fourth_moment_limit_small_delta():
    drv = cp2()
    est = []
    for k, dt in enumerate((0.1, 0.01)):
        x = drv.sample_increment(dt, stream(9, k), size=10**6)[:, 0]
        est.append(np.mean(x**4) / dt)
    assert abs(est[1] - 6.0) < 0.6


def test_increments_add():
    drv = CompoundPoisson(2.0, TwoPointJumps([1.0, -1.0], [0.5, 0.5]))
    a = drv.sample_increment(0.3, stream(10), 50000) + drv.sample_increment(0.2, stream(11), 50000)
    b = drv.sample_increment(0.5, stream(12), 50000)
    sd = math.sqrt(0.5 * 2.0)
    assert abs(a.mean() - b.mean()) < 4 * sd * math.sqrt(2 / 50000)
    assert abs(a.var() - b.var()) < 4 * math.sqrt(2) * b.var() * math.sqrt(2 / 50000) * 2


def test_nu_functionals():
    assert BrownianMotion([[1.0]]).nu_quadratic_functional(lambda x: 1.0, lambda x: 1.0).value == 0.0
    sq = QuadraticForm([[1.0]])
    est = cp2().nu_quadratic_functional(sq, sq)
    assert est.exact and est.value == pytest.approx(6.0)
    mc = cp2().nu_quadratic_functional(lambda x: float(x[0] ** 2), lambda x: float(x[0] ** 2),
                                       mc_budget=200000, rng=stream(13))
    assert not mc.exact and abs(mc.value - 6.0) < 4 * mc.stderr + 1e-12
    one = CompoundPoisson(1.0, GaussianJumps([0.0], [[1.0]]))
    mc = one.nu_quadratic_functional(lambda x: float(x[0]), lambda x: float(x[0] ** 3),
                                     mc_budget=200000, rng=stream(14))
    assert abs(mc.value - 3.0) < 4 * mc.stderr
    with pytest.raises(ValueError):
        one.nu_quadratic_functional(lambda x: 1.0, lambda x: 1.0, mc_budget=0)


def test_nu_two_point_exact():
    drv = CompoundPoisson(2.0, TwoPointJumps([1.0, -2.0], [0.5, 0.5]))
    est = drv.nu_quadratic_functional(lambda x: float(x[0]), lambda x: float(x[0] ** 3))
    assert est.exact and est.value == pytest.approx(2.0 * 0.5 * (1 + 16))


def test_fourth_abs_moment_gaussian():
    # E||L_1||^4 for N(0, I_2) is 8
    assert BrownianMotion(np.eye(2)).fourth_abs_moment == pytest.approx(8.0)
    assert cp2().fourth_abs_moment == pytest.approx(6.0 + 3 * 4.0)


def test_config_roundtrip_and_errors():
    for drv in (BrownianMotion([[2.0]]), cp2(),
                IndependentComponents([cp2(), BrownianMotion([[1.0]])]),
                CompoundPoisson(1.0, TwoPointJumps([1.0, -1.0], [0.5, 0.5]))):
        again = driver_from_config(drv.to_config())
        assert again.to_config() == drv.to_config()
    with pytest.raises(ConfigError, match="driver.kind"):
        driver_from_config({"kind": "stable"})
    with pytest.raises(ConfigError, match="driver.rate"):
        driver_from_config({"kind": "compound_poisson", "jumps": {"law": "gaussian"}})
