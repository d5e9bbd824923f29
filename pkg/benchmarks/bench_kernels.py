"""Compare the compiled and pure-Python Monte Carlo kernels.

Run with ``python benchmarks/bench_kernels.py [--rows R] [--n N] [--repeat K]``.
Both backends get identical inputs; outputs must agree to rounding.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stableld import kernels


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rows: int, n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    u = np.ascontiguousarray(rng.random((rows, n)))
    x0 = np.ascontiguousarray(np.expm1(rng.random(rows) * np.log(2.0)))
    words = rng.bit_generator.random_raw((rows, (n - 1) // 64 + 3)).astype(np.uint64)
    inv = 1.0 / 1.5
    return {
        "pareto_row_sums": lambda b: b.pareto_row_sums(u, 1.0, 0.0, 1.0, inv, 1.0, 0.0, 3.0),
        "gauss_power_sums": lambda b: b.gauss_power_sums(x0, n, inv, 3.6167593479482614, 1.0),
        "doubling_power_sums": lambda b: b.doubling_power_sums(words, n, inv, 3.0, 1.0),
    }


def main(argv=None) -> list[dict]:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled_backend is None:
        print("compiled backend unavailable; build with `pip install -e . --no-build-isolation`")
        return []
    rows = []
    print(f"{'kernel':<22}{'compiled s':>12}{'python s':>12}{'speedup':>10}{'max rel diff':>14}")
    for name, call in cases(args.rows, args.n).items():
        tc = _time(lambda: call(kernels.compiled_backend), args.repeat)
        tp = _time(lambda: call(kernels.python_backend), args.repeat)
        a = np.asarray(call(kernels.compiled_backend))
        b = np.asarray(call(kernels.python_backend))
        ok = np.isfinite(a) & np.isfinite(b)
        diff = float(np.max(np.abs(a[ok] - b[ok]) / np.maximum(np.abs(b[ok]), 1.0)))
        rows.append({"kernel": name, "compiled": tc, "python": tp, "speedup": tp / tc, "max_rel_diff": diff})
        print(f"{name:<22}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}{diff:>14.2e}")
    return rows


if __name__ == "__main__":
    main()
