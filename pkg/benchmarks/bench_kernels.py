"""Time the compiled kernels against the pure-Python reference.

    python3 benchmarks/bench_kernels.py [--rows 1800] [--features 115] [--repeat 5]

Both backends are run on identical inputs and their outputs are checked for
equality before any timing is reported.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from ntlfresh.learn import _kernels_py as python_kernels

try:
    from ntlfresh.learn import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None


def _best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(rows, features, seed):
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(rows, features))
    y_cls = (X[:, 0] + gen.normal(size=rows) > 0.7).astype(np.float64)
    y_reg = X[:, 1] + 0.1 * gen.normal(size=rows)
    boot = gen.integers(0, rows, rows)
    all_rows = np.arange(rows)
    m_try = max(1, math.ceil(0.2 * features))
    row_order = python_kernels.sort_rows(X)  # computed once per forest fit
    y_pm = np.where(y_cls == 1, 1.0, -1.0)
    order = np.array([gen.permutation(rows) for _ in range(20)], dtype=np.int64)
    return {
        "gini tree, full depth, 20% features": lambda k: k.build_tree(
            X, y_cls, boot, k.GINI, -1, 2, 1, m_try, 17),
        "same, given a precomputed row order": lambda k: k.build_tree(
            X, y_cls, boot, k.GINI, -1, 2, 1, m_try, 17, row_order),
        "mse tree, depth 3, all features": lambda k: k.build_tree(
            X, y_reg, all_rows, k.MSE, 3, 2, 1, features, 17),
        "pegasos, 20 epochs": lambda k: k.pegasos(X, y_pm, order, 0.01, True),
    }, X


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1800)
    ap.add_argument("--features", type=int, default=115)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if compiled_kernels is None:
        print("compiled extension not available; build with `pip install -e .`")
        return 1
    cases, X = _cases(args.rows, args.features, args.seed)
    print(f"{args.rows} rows x {args.features} features, best of {args.repeat}")
    print(f"{'case':40s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, run in cases.items():
        t_py, out_py = _best_of(lambda: run(python_kernels), max(1, args.repeat // 2))
        t_c, out_c = _best_of(lambda: run(compiled_kernels), args.repeat)
        if not all(np.array_equal(a, b) for a, b in zip(out_py, out_c)):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:40s} {t_py * 1e3:9.1f}ms {t_c * 1e3:9.1f}ms {t_py / t_c:7.1f}x")
        if name.startswith("gini"):
            tree = out_c
            t_ap_py, a = _best_of(lambda: python_kernels.apply_tree(X, *tree[:4]), args.repeat)
            t_ap_c, b = _best_of(lambda: compiled_kernels.apply_tree(X, *tree[:4]), args.repeat)
            if not np.array_equal(a, b):
                raise SystemExit("apply_tree: backends disagree")
            print(f"{'apply that tree to all rows':40s} {t_ap_py * 1e3:9.1f}ms "
                  f"{t_ap_c * 1e3:9.1f}ms {t_ap_py / t_ap_c:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
