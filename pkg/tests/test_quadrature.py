from __future__ import annotations

import math

import numpy as np
import pytest

from hfmcarma.errors import QuadratureError
from hfmcarma.quadrature import find_horizon, integrate_halfline, integrate_interval, integrate_real_line


def test_exponential():
    v = integrate_halfline(lambda s: np.array([[math.exp(-s)]]), lambda t: math.exp(-t), 1e-10)
    assert abs(v[0, 0] - 1.0) < 1e-10


def test_polynomial_times_exponential():
    v, info = integrate_halfline(lambda s: s * math.exp(-2 * s),
                                 lambda t: (t / 2 + 0.25) * math.exp(-2 * t), 1e-10,
                                 full_output=True)
    assert abs(v - 0.25) < 1e-10
    assert info.error < 1e-10 and info.horizon > 0 and info.panels >= 1


def test_kink_breakpoint():
    f = lambda u: math.exp(-abs(u - 1.0))  # noqa: E731
    v = integrate_real_line(f, lambda w: math.exp(-w), 1e-10, breakpoints=(1.0,))
    assert abs(v - 2.0) < 1e-10


def test_interval_and_degenerate():
    assert abs(integrate_interval(math.sin, 0.0, math.pi, 1e-12) - 2.0) < 1e-12
    assert integrate_interval(math.sin, 1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        integrate_interval(math.sin, 1.0, 0.0)


def test_panel_budget_reported():
    with pytest.raises(QuadratureError):
        integrate_interval(lambda x: math.sin(1.0 / x) if x else 0.0, 0.0, 1.0, 1e-14, max_panels=50)


def test_tail_never_small():
    with pytest.raises(QuadratureError):
        find_horizon(lambda t: 1.0, 1e-8)


def test_horizon_doubling_insensitive():
    f = lambda s: math.exp(-0.5 * s) * math.cos(s)  # noqa: E731
    a = integrate_halfline(f, lambda t: 2 * math.exp(-0.5 * t), 1e-10)
    b = integrate_halfline(f, lambda t: 2 * math.exp(-0.5 * t / 2), 1e-10)
    assert abs(a - 0.4) < 1e-10 and abs(a - b) < 1e-8
