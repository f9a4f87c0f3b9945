from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg

from hfmcarma import (
    BrownianMotion,
    BurnInError,
    CompoundPoisson,
    GaussianJumps,
    IndependentComponents,
    SamplePath,
    TwoPointJumps,
    UnstableMatrixError,
    build_model,
)
from hfmcarma.quadrature import integrate_halfline
from helpers import ou, ou_jump, random_model


def transfer(model, s):
    """P(s)^{-1} Q(s) with P(s) = s^p I + P_1 s^{p-1} + ... and Q(s) = Q_0 s^q + ... + Q_q."""
    p, q, d = model.p, model.q, model.d
    ps = s**p * np.eye(d) + sum(model.ar[i - 1] * s ** (p - i) for i in range(1, p + 1))
    qs = sum(model.ma[j] * s ** (q - j) for j in range(q + 1))
    return np.linalg.solve(ps, qs)


def test_car1_structure():
    m = ou()
    assert m.lam.tolist() == [[1.0]] and m.b.tolist() == [[1.0]] and m.e.tolist() == [[1.0]]


def test_carma21_b_recursion():
    m = build_model([[3.0], [2.0]], [[1.0], [1.0]], BrownianMotion([[1.0]]))
    assert m.b.ravel().tolist() == [1.0, -2.0]
    np.testing.assert_allclose(m.lam, [[0, -1], [2, 3]])
    for t in (0.1, 0.7, 2.0):
        assert m.kernel(t)[0, 0] == pytest.approx(math.exp(-2 * t), rel=1e-12)


def test_block_p1():
    p1 = np.array([[2.0, 0.5], [0.0, 1.0]])
    q0 = np.array([[1.0, 0.0], [0.3, 1.0]])
    m = build_model([p1], [q0], BrownianMotion(np.eye(2)))
    np.testing.assert_array_equal(m.lam, p1)
    np.testing.assert_array_equal(m.b, q0)
    np.testing.assert_array_equal(m.e, np.eye(2))


def test_kernel_matches_transfer_function():
    rng = np.random.default_rng(21)
    for _ in range(10):
        m = random_model(rng)
        for s in (0.5, 1.3, 4.0):
            lap = m.e @ np.linalg.solve(s * np.eye(m.state_dim) - m.a, m.b)
            np.testing.assert_allclose(lap, transfer(m, s), atol=1e-9)


def test_kernel_causal_and_right_limit():
    m = build_model([[3.0], [2.0]], [[1.0]], BrownianMotion([[1.0]]))
    assert np.all(m.kernel(-1.0) == 0) and np.all(m.kernel(0.0) == 0)
    m2 = build_model([[3.0], [2.0]], [[0.7], [1.0]], BrownianMotion([[1.0]]))
    np.testing.assert_allclose(m2.kernel(1e-8), m2.ma[0], atol=1e-7)
    np.testing.assert_allclose(m2.e @ m2.b, m2.ma[0])


def test_build_errors():
    bm = BrownianMotion([[1.0]])
    with pytest.raises(ValueError):
        build_model([[1.0]], [[1.0], [1.0]], bm)
    with pytest.raises(ValueError):
        build_model([[1.0]], [[0.0]], bm)
    with pytest.raises(UnstableMatrixError):
        build_model([[-1.0]], [[1.0]], bm)
    with pytest.raises(ValueError):
        build_model([[1.0]], [[1.0, 2.0]], bm)
    with pytest.raises(TypeError):
        build_model([[1.0]], [[1.0]], object())


def test_ou_acvf_closed_form():
    a, b, var = 1.7, 0.6, 2.5
    m = ou(a, b, var)
    for h in (0.0, 0.3, 1.0, 5.0):
        ref = var * b * b * math.exp(-a * h) / (2 * a)
        assert abs(m.acvf(h)[0, 0] - ref) < 1e-10
    assert m.stationary_state_cov()[0, 0] == pytest.approx(var * b * b / (2 * a))


def test_acvf_negative_lag_transposes():
    m = random_model(np.random.default_rng(1))
    np.testing.assert_allclose(m.acvf(-0.4), m.acvf(0.4).T)


def test_acvf_matches_kernel_quadrature():
    rng = np.random.default_rng(22)
    for _ in range(5):
        m = random_model(rng)
        c, alpha = m.stable.decay_envelope()
        bound = c * c * np.linalg.norm(m.b, 2) ** 2 * np.linalg.norm(m.driver.sigma_L, 2)
        for h in (0.0, 0.3, 1.0):
            ref = integrate_halfline(
                lambda s: m.kernel(s) @ m.driver.sigma_L @ m.kernel(s + h).T,
                lambda t: bound * math.exp(-alpha * (2 * t + h)) / (2 * alpha), 1e-11)
            np.testing.assert_allclose(m.acvf(h), ref, atol=1e-8)


def test_stationary_cov_consistency():
    rng = np.random.default_rng(23)
    for _ in range(5):
        m = random_model(rng)
        v = m.stationary_state_cov()
        assert np.min(np.linalg.eigvalsh(v)) >= -1e-10
        np.testing.assert_allclose(m.e @ v @ m.e.T, m.acvf(0.0), atol=1e-12)


def test_discrete_lyapunov_fixed_point():
    rng = np.random.default_rng(24)
    for _ in range(5):
        m = random_model(rng)
        for delta in (0.01, 0.3):
            disc = m.discretization(delta)
            v = m.stationary_state_cov()
            np.testing.assert_allclose(disc.phi @ v @ disc.phi.T + disc.gauss_cov, v, atol=1e-10)
            np.testing.assert_allclose(disc.phi, scipy.linalg.expm(m.a * delta), atol=1e-13)


def test_ou_long_path_variance():
    path = ou().simulate(10**6, 0.01, 20240601)
    assert path.observations.shape == (10**6, 1)
    assert abs(path.observations.var() - 0.5) < 0.02 * 0.5


def test_ou_lag_autocorrelation():
    delta = 0.1
    y = ou().simulate(200000, delta, 5).observations[:, 0]
    y = y - y.mean()
    rho = np.dot(y[:-1], y[1:]) / np.dot(y, y)
    # the sampled path is AR(1) with coefficient r; sd of its lag-1 autocorrelation is sqrt((1 - r^2)/n)
    r = math.exp(-delta)
    assert abs(rho - r) < 4 * math.sqrt((1 - r * r) / 200000)


def test_simulate_determinism_and_errors():
    m = ou()
    a = m.simulate(500, 0.1, 9).observations
    b = m.simulate(500, 0.1, 9).observations
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        m.simulate(0, 0.1, 1)
    with pytest.raises(ValueError):
        m.simulate(10, 0.0, 1)


def test_jump_model_moments():
    m = ou_jump()
    reps = [m.simulate(2000, 0.05, s).observations[:, 0] for s in range(40)]
    y = np.concatenate(reps)
    assert abs(y.mean()) < 0.1
    assert abs(y.var() - 1.0) < 0.1


def test_jump_increment_law_exact():
    # one-step map of a CAR(1) state: Z_1 = e^{-a} Z_0 + xi, with var(xi) = sigma^2 (1 - e^{-2a})/(2a)
    m = build_model([[2.0]], [[1.0]], CompoundPoisson(3.0, TwoPointJumps([1.0, -1.0], [0.5, 0.5])))
    xi = np.concatenate([m._jump_innovations(1000, 0.4, np.random.default_rng(s))[:, 0]
                         for s in range(40)])
    ref = 3.0 * (1 - math.exp(-2 * 2.0 * 0.4)) / (2 * 2.0)
    assert abs(xi.mean()) < 4 * math.sqrt(ref / len(xi))
    assert abs(xi.var() / ref - 1) < 0.05


def test_multivariate_jump_simulation_matches_acvf():
    drv = IndependentComponents([CompoundPoisson(2.0, GaussianJumps([0.0], [[1.0]])),
                                 BrownianMotion([[0.5]])])
    m = build_model([np.array([[3.0, 0.2], [0.0, 2.0]]), 2 * np.eye(2)],
                    [np.array([[1.0, 0.0], [0.5, 1.0]])], drv)
    g = np.zeros((2, 2))
    k = 0
    for s in range(30):
        y = m.simulate(4000, 0.05, s).observations
        g += y[:-4].T @ y[4:] / len(y)
        k += 1
    np.testing.assert_allclose(g / k, m.acvf(0.2), atol=0.03)


def test_burn_in_budget():
    m = ou_jump(a=0.01)
    with pytest.raises(BurnInError):
        m.simulate(10, 0.001, 1, burn_in_budget=1000)


def test_sample_path_csv_roundtrip(tmp_path):
    path = ou().simulate(50, 0.01, 3)
    f = path.to_csv(tmp_path / "p.csv")
    lines = f.read_text().splitlines()
    assert lines[0] == "t,y1" and len(lines) == 51
    assert lines[1].startswith("0.01,") and lines[3].startswith("0.03,")
    back = SamplePath.from_csv(f)
    assert np.array_equal(back.observations, path.observations)
    assert back.delta == 0.01 and back.seed == 3 and back.model_id == ou().model_id


def test_sample_path_validation():
    with pytest.raises(ValueError):
        SamplePath(0.1, np.array([[np.nan]]))
    with pytest.raises(ValueError):
        SamplePath(0.1, np.zeros((0, 1)))


def test_model_id_depends_on_spec():
    assert ou().model_id == ou().model_id
    assert ou().model_id != ou(a=2.0).model_id
    assert len(ou().model_id) == 16
