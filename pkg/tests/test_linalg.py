from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hfmcarma.errors import UnstableMatrixError
from hfmcarma.linalg import (
    StableMatrix,
    expm,
    kron,
    kron_permutation,
    lyapunov_stationary,
    solve_kron_sum,
    unvec,
    vec,
)
from hfmcarma.quadrature import integrate_halfline
from helpers import random_stable

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def mats(r, c):
    return arrays(np.float64, (r, c), elements=finite)


def test_vec_examples():
    assert vec([[1, 2], [3, 4]]).tolist() == [1, 3, 2, 4]
    assert vec(np.eye(2)).tolist() == [1, 0, 0, 1]


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_vec_roundtrip(r, c, data):
    m = data.draw(mats(r, c))
    assert np.array_equal(unvec(vec(m), r, c), m)
    # component (j-1) rows + i equals m(i, j)
    for i in range(r):
        for j in range(c):
            assert vec(m)[j * r + i] == m[i, j]


@given(st.data())
def test_vec_outer(data):
    x = data.draw(arrays(np.float64, 3, elements=finite))
    y = data.draw(arrays(np.float64, 3, elements=finite))
    np.testing.assert_allclose(vec(np.outer(x, y)), np.kron(y, x), atol=1e-12)


def test_kron_identity_blocks():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[0.0, 5.0]])
    k = kron(a, b)
    assert k.shape == (2, 4)
    for i in range(2):
        for j in range(2):
            np.testing.assert_array_equal(k[i:i + 1, 2 * j:2 * j + 2], a[i, j] * b)


@settings(max_examples=50)
@given(st.integers(1, 4), st.data())
def test_mixed_product_and_vec_abc(n, data):
    a, b, c, d = (data.draw(mats(n, n)) for _ in range(4))
    np.testing.assert_allclose(kron(a, c) @ kron(b, d), kron(a @ b, c @ d), atol=1e-9, rtol=1e-12)
    np.testing.assert_allclose(vec(a @ b @ c), kron(c.T, a) @ vec(b), atol=1e-9, rtol=1e-12)


def test_kron_permutation_scalar():
    assert kron_permutation(1).tolist() == [[1.0]]
    with pytest.raises(ValueError):
        kron_permutation(0)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_kron_permutation_properties(m):
    p = kron_permutation(m)
    assert set(np.unique(p)) <= {0.0, 1.0}
    assert np.all(p.sum(axis=0) == 1) and np.all(p.sum(axis=1) == 1)
    np.testing.assert_array_equal(p @ p, np.eye(m * m))
    # matches sum_{i,j} e_i e_j^T (x) e_j e_i^T
    ref = np.zeros((m * m, m * m))
    eye = np.eye(m)
    for i in range(m):
        for j in range(m):
            ref += np.kron(np.outer(eye[i], eye[j]), np.outer(eye[j], eye[i]))
    np.testing.assert_array_equal(p, ref)


@given(st.integers(1, 4), st.data())
def test_kron_permutation_swaps(m, data):
    x = data.draw(arrays(np.float64, m, elements=finite))
    y = data.draw(arrays(np.float64, m, elements=finite))
    p = kron_permutation(m)
    np.testing.assert_allclose(p @ np.kron(x, y), np.kron(y, x), atol=1e-12)
    a, b = data.draw(mats(m, m)), data.draw(mats(m, m))
    np.testing.assert_allclose(p @ kron(a, b), kron(b, a) @ p, atol=1e-9)


def test_expm_examples():
    np.testing.assert_array_equal(expm(np.zeros((2, 2)), 5), np.eye(2))
    np.testing.assert_allclose(expm(np.diag([-1.0, -2.0]), 1), np.diag([np.exp(-1), np.exp(-2)]),
                               rtol=1e-14)
    with pytest.raises(ValueError):
        expm(np.ones((2, 3)))


def test_expm_semigroup():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = random_stable(rng, 3).a
        s, t = rng.uniform(0, 2, size=2)
        np.testing.assert_allclose(expm(a, s + t), expm(a, s) @ expm(a, t), atol=1e-10)


def test_stable_matrix_checks():
    with pytest.raises(UnstableMatrixError):
        StableMatrix([[0.0]])
    with pytest.raises(UnstableMatrixError):
        StableMatrix([[-1e-11]])
    with pytest.raises(UnstableMatrixError):
        StableMatrix([[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        StableMatrix(np.ones((2, 3)))
    s = StableMatrix([[-1.0, 5.0], [0.0, -2.0]])
    assert s.abscissa == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        s.a[0, 0] = 3.0


def test_decay_envelope_bounds_norm():
    rng = np.random.default_rng(5)
    for _ in range(5):
        s = random_stable(rng, 4)
        c, alpha = s.decay_envelope()
        for t in np.linspace(0, 30, 301):
            assert np.linalg.norm(s.expm(t), 2) <= c * np.exp(-alpha * t) * (1 + 1e-12)


def test_lyapunov_examples():
    np.testing.assert_allclose(lyapunov_stationary([[-1.0]], [[2.0]]), [[1.0]])
    np.testing.assert_allclose(lyapunov_stationary(np.diag([-1.0, -2.0]), np.eye(2)),
                               np.diag([0.5, 0.25]))
    with pytest.raises(UnstableMatrixError):
        lyapunov_stationary([[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        lyapunov_stationary([[-1.0, 0], [0, -1]], [[1.0, 2.0], [0.0, 1.0]])


def test_lyapunov_matches_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(5):
        s = random_stable(rng, 4)
        g = rng.standard_normal((4, 4))
        q = g @ g.T
        v = lyapunov_stationary(s, q)
        assert np.array_equal(v, v.T)
        assert np.min(np.linalg.eigvalsh(v)) >= -1e-10
        resid = s.a @ v + v @ s.a.T + q
        assert np.linalg.norm(resid) <= 1e-10 * np.linalg.norm(q)
        c, alpha = s.decay_envelope()
        qn = np.linalg.norm(q, 2)
        ref = integrate_halfline(lambda t: s.expm(t) @ q @ s.expm(t).T,
                                 lambda t: c * c * qn * np.exp(-2 * alpha * t) / (2 * alpha), 1e-10)
        np.testing.assert_allclose(v, ref, atol=1e-8)


def test_solve_kron_sum_nonsymmetric():
    rng = np.random.default_rng(2)
    a = random_stable(rng, 3).a
    c = rng.standard_normal((3, 3))
    x = solve_kron_sum(a, c)
    np.testing.assert_allclose(a @ x + x @ a.T + c, 0, atol=1e-10)
