#!/usr/bin/env python3
"""Compare the compiled tree kernels against the pure-numpy fallback.

Times tree building and prediction on a synthetic CDF dataset of the same
shape the training pipeline produces, and verifies the two backends return
bit-identical trees. Run after `pip install -e .`:

    python benchmarks/bench_backends.py [--rows 50000] [--depth 15] [--rounds 3]
"""
import argparse
import time

import numpy as np

from ionprof._kernels import fallback
from ionprof.domain import ion_by_name
from ionprof.ground_truth import SyntheticCdf
from ionprof.sampler import build_dataset, make_grid

try:
    from ionprof._kernels import _core as compiled
except ImportError:
    compiled = None


def make_data(rows: int):
    ions = [ion_by_name(n) for n in ("Na", "Cl", "K")]
    grid = make_grid(ions, [1.0, 1.4, 2.0, 2.6, 3.0], [1.0, 1.8, 2.6, 3.4])
    per_config = max(2, 2 * (rows // (2 * len(grid))))
    dataset = build_dataset(grid, SyntheticCdf(), per_config, master_seed=17)
    X = dataset.train.features
    residuals = dataset.train.targets - 0.5
    return np.ascontiguousarray(X[:rows]), residuals[:rows]


def time_backend(impl, X, residuals, depth: int, lam: float, rounds: int):
    build_times, predict_times = [], []
    tree = None
    for _ in range(rounds):
        t0 = time.perf_counter()
        tree = impl.build_tree(X, residuals, depth, lam, 1)
        build_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        impl.predict_tree(*tree, X)
        predict_times.append(time.perf_counter() - t0)
    return min(build_times), min(predict_times), tree


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=50_000)
    parser.add_argument("--depth", type=int, default=15)
    parser.add_argument("--lam", type=float, default=5.0)
    parser.add_argument("--rounds", type=int, default=3, help="repetitions; best time kept")
    args = parser.parse_args()

    X, residuals = make_data(args.rows)
    print(f"dataset: {X.shape[0]} rows x {X.shape[1]} features, depth {args.depth}")

    fb_build, fb_predict, fb_tree = time_backend(
        fallback, X, residuals, args.depth, args.lam, args.rounds
    )
    print(f"fallback : build {fb_build:8.3f} s   predict {fb_predict:8.4f} s   "
          f"nodes {fb_tree[0].size}")

    if compiled is None:
        print("compiled : unavailable (extension not built)")
        return

    c_build, c_predict, c_tree = time_backend(
        compiled, X, residuals, args.depth, args.lam, args.rounds
    )
    print(f"compiled : build {c_build:8.3f} s   predict {c_predict:8.4f} s   "
          f"nodes {c_tree[0].size}")
    print(f"speedup  : build {fb_build / c_build:6.1f}x    predict "
          f"{fb_predict / c_predict:6.1f}x")

    for a, b in zip(c_tree, fb_tree):
        assert np.array_equal(a, b)
    print("parity   : trees bit-identical across backends")


if __name__ == "__main__":
    main()
