#!/usr/bin/env python3
"""Benchmark the compiled Monte Carlo kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeat K]

Both backends implement the same counter-based draw layout, so their
outputs are bit-identical; this script checks that while timing them.
"""

import argparse
import time

import numpy as np

from starqnet._kernels import _pure
from starqnet.engine import stream_base

try:
    from starqnet._kernels import _core
except ImportError:
    _core = None


def time_call(fn, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def flatten(result):
    parts = []

    def walk(x):
        if isinstance(x, tuple):
            for y in x:
                walk(y)
        elif isinstance(x, np.ndarray):
            parts.append(x)
        else:
            parts.append(np.asarray([x]))

    walk(result)
    return parts


def check_equal(a, b):
    fa, fb = flatten(a), flatten(b)
    assert len(fa) == len(fb)
    for x, y in zip(fa, fb):
        assert np.array_equal(x, y), "backend outputs diverged"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    n = args.steps
    sb = [stream_base(7, i) for i in range(12)]
    cases = {
        "bb84 (baseline single hop)": (
            "bb84_run",
            (sb[0], 0, sb[1], n, 8e-3, 0.0, 0.9, 0.02, False, 1.0, 1.0, 0.0,
             0.95, 1e-5, 1e-8, True),
        ),
        "bb84 (two-hop transmitted)": (
            "bb84_run",
            (sb[0], sb[2], sb[1], n, 8e-3, 0.01, 0.88, 0.02, True, 0.9, 0.25,
             0.02, 0.95, 1e-5, 1e-8, True),
        ),
        "bbm92": (
            "bbm92_run",
            (sb[0], sb[1], sb[2], n, 1e-2, 0.85, 0.02, 0.25, 0.02,
             0.95, 1e-5, 1e-8, 0.95, 1e-5, 1e-8),
        ),
        "mdi": (
            "mdi_run",
            (sb[0], sb[1], sb[2], n, 8e-3, 0.9, 8e-3, 0.8, 0.36),
        ),
        "ghz (4 parties)": (
            "ghz_run",
            (sb[0], sb[3:7], n // 10, 3.6e-3, [0.85, 0.76, 0.67, 0.41],
             [0.02] * 4, 0.0, [0.95] * 4, [1e-5] * 4, [1e-8] * 4),
        ),
    }

    print(f"steps per case: {n:,} (ghz: {n // 10:,}); best of {args.repeat}")
    header = f"{'kernel':<28} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, (fn_name, fn_args) in cases.items():
        t_pure, r_pure = time_call(getattr(_pure, fn_name), fn_args, args.repeat)
        if _core is None:
            print(f"{name:<28} {t_pure:>10.3f} {'n/a':>13} {'n/a':>9}")
            continue
        t_core, r_core = time_call(getattr(_core, fn_name), fn_args, args.repeat)
        check_equal(r_pure, r_core)
        print(f"{name:<28} {t_pure:>10.3f} {t_core:>13.3f} {t_pure / t_core:>8.1f}x")
    if _core is None:
        print("\ncompiled backend unavailable; showing the numpy fallback only")
    else:
        print("\noutputs verified bit-identical between backends")


if __name__ == "__main__":
    main()
