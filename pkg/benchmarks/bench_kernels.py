#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py [--repeats N]

Sizes mirror the hot paths of the simulation study: the exhaustive ternary
excision search, the banded regression sweep inside band-selection
cross-validation, the unit lower triangular inverse it needs per candidate
band, dense Cholesky, and the incomplete beta behind the t CDF.
"""

import argparse
import time

import numpy as np

from datekit import kernels


def timeit(fn, repeats):
    fn()  # warm up (numba compiles here)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def make_spd(gen, p):
    g = gen.standard_normal((p, p + 2))
    raw = g @ g.T / (p + 2) + 0.5 * np.eye(p)
    return (raw + raw.T) / 2.0


def build_cases():
    gen = np.random.default_rng(0)
    cases = []

    a_small = np.ascontiguousarray(make_spd(gen, 10))
    d_small = gen.standard_normal(10)
    cases.append(
        (
            "l0_enumerate m=10 (59049 states)",
            "l0_enumerate",
            (a_small, d_small, 30.0, 9.0, 0.6, 1e-9),
        )
    )
    a_big = np.ascontiguousarray(make_spd(gen, 12))
    d_big = gen.standard_normal(12)
    cases.append(
        (
            "l0_enumerate m=12 (531441 states)",
            "l0_enumerate",
            (a_big, d_big, 30.0, 9.0, 0.6, 1e-9),
        )
    )

    x = gen.standard_normal((95, 500))
    xt = np.ascontiguousarray(x.T)
    cases.append(("banded_sweep p=500 n=95 tau<=20", "banded_sweep", (xt, 20, 1e-8)))

    coef, dvar, _ = kernels.NUMPY_IMPLS["banded_sweep"](xt, 20, 1e-8)
    c20 = np.ascontiguousarray(coef[20])
    cases.append(("unit_lower_inverse p=500 tau=20", "unit_lower_inverse", (c20, 20)))
    cases.append(
        (
            "precision_from_regressions p=500 tau=20",
            "precision_from_regressions",
            (c20, np.ascontiguousarray(dvar[20]), 20),
        )
    )

    spd = np.ascontiguousarray(make_spd(gen, 400))
    cases.append(("cholesky_lower p=400", "cholesky_lower", (spd, 1e-12)))

    xs = np.ascontiguousarray(gen.random(100_000))
    cases.append(("betainc_arr 1e5 values (df=58)", "betainc_arr", (29.0, 0.5, xs)))
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = sorted(kernels.IMPLEMENTATIONS)
    print(f"active backend: {kernels.BACKEND}")
    header = f"{'kernel':44s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}"
    print(header)
    print("-" * len(header))
    for label, name, call_args in build_cases():
        times = {}
        for backend in backends:
            fn = kernels.IMPLEMENTATIONS[backend][name]
            times[backend] = timeit(lambda: fn(*call_args), args.repeats)
        row = f"{label:44s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if "numba" in times and "numpy" in times:
            row += f"{times['numpy'] / times['numba']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
