"""Adaptive composite Gauss-Legendre quadrature for matrix-valued integrands.

Panels are bisected until a 15-point rule on the panel and the sum of the
rules on its halves agree to a share of the tolerance proportional to the
panel length.  Half-line integrals are truncated where a caller-supplied tail
bound drops below half the tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(15)
MAX_PANELS = 20000
MAX_HORIZON = 1e7


@dataclass(frozen=True)
class QuadInfo:
    """Diagnostics of one integral: estimated absolute error, truncation point, panel count."""

    error: float
    horizon: float
    panels: int


def _rule(f, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    acc = None
    for x, w in zip(_NODES, _WEIGHTS):
        term = w * np.asarray(f(mid + half * x), dtype=float)
        acc = term if acc is None else acc + term
    return half * acc


def integrate_interval(f, a: float, b: float, tol: float = 1e-10, *,
                       initial_panels: int = 1, max_panels: int = MAX_PANELS,
                       full_output: bool = False):
    """Integrate ``f`` over ``[a, b]`` to absolute (max-entry) error ``tol``."""
    if not b > a:
        if b == a:
            z = np.zeros_like(np.asarray(f(a), dtype=float))
            return (z, QuadInfo(0.0, b, 0)) if full_output else z
        raise ValueError("integration interval must have b >= a")
    width = b - a
    edges = np.linspace(a, b, initial_panels + 1)
    stack = [(lo, hi, _rule(f, lo, hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    total = None
    err = 0.0
    accepted = 0
    while stack:
        lo, hi, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _rule(f, lo, mid), _rule(f, mid, hi)
        fine = left + right
        diff = float(np.max(np.abs(fine - coarse)))
        if diff <= tol * (hi - lo) / width or (hi - lo) < 1e-12 * width:
            total = fine if total is None else total + fine
            err += diff
            accepted += 1
        else:
            stack.append((mid, hi, right))
            stack.append((lo, mid, left))
        if accepted + len(stack) > max_panels:
            raise QuadratureError(
                f"tolerance {tol:g} not reached on [{a:g}, {b:g}] within {max_panels} panels"
            )
    return (total, QuadInfo(err, b, accepted)) if full_output else total


def find_horizon(tail_bound, tol: float, start: float = 1.0) -> float:
    """Smallest doubling of ``start`` with ``tail_bound(T) < tol / 2``."""
    t = max(start, 1e-3)
    while tail_bound(t) >= 0.5 * tol:
        t *= 2.0
        if t > MAX_HORIZON:
            raise QuadratureError("tail bound never drops below the tolerance")
    return t


def integrate_halfline(f, tail_bound, tol: float = 1e-10, *, breakpoints=(),
                       panel_width: float | None = None, max_panels: int = MAX_PANELS,
                       full_output: bool = False):
    """Integrate ``f`` over ``[0, inf)``.

    ``tail_bound(T)`` must bound ``||int_T^inf f||`` from above and decrease
    in ``T``.  The integral is truncated at the first doubling ``T*`` with
    ``tail_bound(T*) < tol/2``; the remaining ``tol/2`` goes to the panels.
    ``breakpoints`` are interior points where ``f`` has kinks.
    """
    horizon = find_horizon(tail_bound, tol)
    cuts = sorted({0.0, horizon, *(float(b) for b in breakpoints if 0.0 < b < horizon)})
    total = None
    err = float(tail_bound(horizon))
    panels = 0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        share = 0.5 * tol * (hi - lo) / horizon
        n0 = 1 if panel_width is None else max(1, int(np.ceil((hi - lo) / panel_width)))
        part, info = integrate_interval(f, lo, hi, share, initial_panels=n0,
                                        max_panels=max_panels, full_output=True)
        total = part if total is None else total + part
        err += info.error
        panels += info.panels
    return (total, QuadInfo(err, horizon, panels)) if full_output else total


def integrate_real_line(f, tail_bound, tol: float = 1e-10, *, breakpoints=(0.0,),
                        panel_width: float | None = None, full_output: bool = False):
    """Integrate ``f`` over the real line.

    ``tail_bound(v)`` bounds the integral beyond distance ``v`` past the
    outermost breakpoint on either side.
    """
    pts = sorted({float(b) for b in breakpoints}) or [0.0]
    lo, hi = pts[0], pts[-1]
    left, li = integrate_halfline(lambda v: f(lo - v), tail_bound, tol / 3,
                                  panel_width=panel_width, full_output=True)
    right, ri = integrate_halfline(lambda v: f(hi + v), tail_bound, tol / 3,
                                   panel_width=panel_width, full_output=True)
    total = left + right
    err = li.error + ri.error
    panels = li.panels + ri.panels
    for a, b in zip(pts[:-1], pts[1:]):
        part, info = integrate_interval(f, a, b, tol / 3 * (b - a) / (hi - lo),
                                        full_output=True)
        total = total + part
        err += info.error
        panels += info.panels
    info = QuadInfo(err, max(li.horizon, ri.horizon), panels)
    return (total, info) if full_output else total
