"""Model factories shared by the tests."""
from __future__ import annotations

import numpy as np

from hfmcarma import BrownianMotion, CompoundPoisson, GaussianJumps, build_model
from hfmcarma.linalg import StableMatrix
from hfmcarma.errors import UnstableMatrixError


def ou(a=1.0, b=1.0, var=1.0):
    return build_model([[a]], [[b]], BrownianMotion([[var]]))


def ou_jump(a=1.0, b=1.0, rate=2.0):
    return build_model([[a]], [[b]], CompoundPoisson(rate, GaussianJumps([0.0], [[1.0]])))


def stable_poly(rng, p):
    """Monic polynomial coefficients (P_1..P_p) with roots in the open left half-plane."""
    roots = []
    while len(roots) < p:
        if p - len(roots) >= 2 and rng.random() < 0.5:
            re, im = -rng.uniform(0.3, 2.0), rng.uniform(0.1, 2.0)
            roots += [complex(re, im), complex(re, -im)]
        else:
            roots.append(-rng.uniform(0.3, 2.0))
    return np.real(np.poly(roots))[1:]


def random_model(rng, max_state=8):
    """Random stable MCARMA with pd <= max_state and a Brownian driver."""
    while True:
        d = int(rng.integers(1, 3))
        p = int(rng.integers(1, max_state // d + 1))
        q = int(rng.integers(0, p))
        m = int(rng.integers(1, 3))
        c = stable_poly(rng, p)
        ar = [ci * np.eye(d) + 0.1 * rng.standard_normal((d, d)) for ci in c]
        ma = [rng.standard_normal((d, m)) for _ in range(q + 1)]
        g = rng.standard_normal((m, m))
        cov = g @ g.T + 0.1 * np.eye(m)
        try:
            return build_model(ar, ma, BrownianMotion(cov))
        except UnstableMatrixError:
            continue


def random_stable(rng, n):
    while True:
        a = rng.standard_normal((n, n)) - 1.5 * np.eye(n)
        try:
            return StableMatrix(a)
        except UnstableMatrixError:
            continue
