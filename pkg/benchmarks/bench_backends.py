#!/usr/bin/env python3
"""Compare the compiled and pure-NumPy kernel backends.

Times each hot kernel on identical inputs under every importable backend
and prints a table of best-of-N wall times plus the speedup of the
compiled extension over the fallback.

Usage:
    python benchmarks/bench_backends.py [--height H] [--width W]
                                        [--d-max D] [--repeats N]
"""

import argparse
import time

import numpy as np

from branchrange import _kernels as kernels


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def build_inputs(height, width, d_max, seed=0):
    rng = np.random.default_rng(seed)
    left = rng.integers(0, 256, (height, width), dtype=np.uint8)
    right = np.roll(left, -6, axis=1)
    census_left = kernels.census_transform(left, 2)
    census_right = kernels.census_transform(right, 2)
    cost = kernels.hamming_cost_volume(census_left, census_right, d_max)
    disp = rng.uniform(0.0, d_max, (height, width)).astype(np.float32)
    disp[rng.random((height, width)) < 0.2] = -1.0
    guide = left.astype(np.float64)
    conf = (disp >= 0).astype(np.float64)
    data = np.where(disp >= 0, disp, 0.0).astype(np.float64)
    w_right = np.zeros((height, width))
    w_down = np.zeros((height, width))
    w_right[:, :-1] = np.exp(-np.abs(guide[:, 1:] - guide[:, :-1]) / 8.0)
    w_down[:-1, :] = np.exp(-np.abs(guide[1:, :] - guide[:-1, :]) / 8.0)
    u0 = data.copy()
    return {
        "census_transform": (left, 2),
        "hamming_cost_volume": (census_left, census_right, d_max),
        "sad_cost_volume": (left, right, d_max, 2),
        "sgm_aggregate": (cost, 8, 32, 8),
        "median3x3": (disp,),
        "gauss_seidel": (u0, data, conf, w_right, w_down, 0.12, 25),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--height", type=int, default=240)
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--d-max", type=int, default=48)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(sorted(backends))}   "
          f"image {args.width}x{args.height}, d_max {args.d_max}, "
          f"best of {args.repeats}")
    if "cython" not in backends:
        print("note: compiled extension not importable; "
              "timing the fallback only")

    inputs = build_inputs(args.height, args.width, args.d_max)
    names = sorted(backends)
    header = f"{'kernel':<22}" + "".join(f"{n + ' (ms)':>16}" for n in names)
    if {"cython", "numpy"} <= set(names):
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for kernel_name, kernel_args in inputs.items():
        times = {}
        for name in names:
            fn = getattr(backends[name], kernel_name)
            # gauss_seidel mutates u0 in place; give each run a fresh copy
            if kernel_name == "gauss_seidel":
                run_args = (kernel_args[0].copy(), *kernel_args[1:])
            else:
                run_args = kernel_args
            times[name] = best_of(args.repeats, fn, *run_args)
        row = f"{kernel_name:<22}" + "".join(
            f"{times[n] * 1e3:>16.2f}" for n in names
        )
        if {"cython", "numpy"} <= times.keys():
            row += f"{times['numpy'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
