"""Compare the compiled kernels with the pure-Python fallback.

Run ``python3 benchmarks/bench_kernels.py [--n N] [--repeat R]``.  Each row
reports the best-of-R wall time per backend and the largest absolute
difference between their outputs.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from hfmcarma._backend import column_sums, implementations, lagged_cross_sums, state_recursion


def cases(n: int, rng: np.random.Generator):
    phi1 = np.array([[np.exp(-0.05)]])
    xi1 = rng.standard_normal((n, 1))
    phi4 = 0.9 * np.linalg.qr(rng.standard_normal((4, 4)))[0]
    xi4 = rng.standard_normal((n, 4))
    y2 = rng.standard_normal((n, 2))
    lags = np.array([0, 1, 5, 20])
    return {
        "state_recursion k=1": lambda impl: state_recursion(phi1, xi1, np.zeros(1), impl=impl),
        "state_recursion k=4": lambda impl: state_recursion(phi4, xi4, np.zeros(4), impl=impl),
        "column_sums d=2": lambda impl: column_sums(y2, impl=impl),
        "lagged_cross_sums d=2, 4 lags": lambda impl: lagged_cross_sums(
            y2, y2.mean(axis=0), lags, impl=impl),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    impls = implementations()
    rng = np.random.default_rng(0)
    names = sorted(impls)
    print(f"n = {args.n}; backends: {', '.join(names)}")
    header = f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in names) + f"{'speedup':>10s}{'max diff':>12s}"
    print(header)
    for label, fn in cases(args.n, rng).items():
        times, outs = {}, {}
        for b in names:
            impl = impls[b]
            outs[b] = fn(impl)
            times[b] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        diff = float(np.max(np.abs(outs["python"] - outs.get("cython", outs["python"]))))
        row = f"{label:32s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in names)
        print(row + f"{speed:9.1f}x{diff:12.2e}")


if __name__ == "__main__":
    main()
