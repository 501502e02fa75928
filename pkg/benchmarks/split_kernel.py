"""Compare the compiled split-search kernel against the numpy fallback.

The split search is the hot loop of tree fitting: every node of every tree
scans each candidate column once.  This script times the two implementations
on identical inputs, checks their outputs stay bit-identical (the fallback's
contract), and reports a node-level and a forest-level view.

Run from the repository root:

    python3 benchmarks/split_kernel.py
    python3 benchmarks/split_kernel.py --repeats 9 --trees 40
"""

import argparse
import time

import numpy as np

from gprwall import _split_py
from gprwall import baselines

try:
    from gprwall import _split as _split_c
except ImportError:  # extension not built; fallback-only timings
    _split_c = None

PANELS = ((256, 8), (1024, 16), (4096, 25), (655, 655))


def _panel(n, m, n_classes, rng):
    values = np.ascontiguousarray(rng.normal(size=(n, m)))
    order = np.ascontiguousarray(np.argsort(values, axis=0))
    y = np.ascontiguousarray(rng.integers(0, n_classes, n))
    return values, order, y


def _best_of(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernel(repeats: int, seed: int) -> None:
    print("node-level best_split (min over %d runs)" % repeats)
    header = f"{'panel':>12} {'numpy':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(seed)
    for n, m in PANELS:
        values, order, y = _panel(n, m, 2, rng)
        args = (values, order, y, 2)
        py = _best_of(_split_py.best_split, args, repeats)
        if _split_c is None:
            print(f"{f'{n}x{m}':>12} {py * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
            continue
        cy = _best_of(_split_c.best_split, args, repeats)
        if _split_py.best_split(*args) != _split_c.best_split(*args):
            raise SystemExit(f"kernel outputs diverge on panel {n}x{m}")
        print(f"{f'{n}x{m}':>12} {py * 1e3:>8.2f}ms {cy * 1e3:>8.2f}ms {py / cy:>7.1f}x")
    if _split_c is not None:
        print("outputs bit-identical on all panels")


def bench_forest(repeats: int, trees: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(1200, 64))
    y = (X[:, 3] + X[:, 17] * X[:, 40] > 0).astype(np.int64)

    def fit(impl):
        saved = baselines._split_impl
        baselines._split_impl = impl
        try:
            return _best_of(
                lambda: baselines.RandomForest(n_trees=trees, seed=0).fit(X, y), (), repeats
            )
        finally:
            baselines._split_impl = saved

    print(f"\nforest fit, {trees} trees on 1200x64 (min over {repeats} runs)")
    py = fit(_split_py)
    print(f"{'numpy':>8}: {py:8.3f}s")
    if _split_c is not None:
        cy = fit(_split_c)
        print(f"{'cython':>8}: {cy:8.3f}s   ({py / cy:.1f}x)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats per case")
    parser.add_argument("--trees", type=int, default=20, help="forest size for the macro case")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    print(f"active kernel at import: {baselines.SPLIT_IMPLEMENTATION}")
    if _split_c is None:
        print("compiled extension not available; showing fallback only")
    bench_kernel(args.repeats, args.seed)
    bench_forest(args.repeats, args.trees, args.seed)


if __name__ == "__main__":
    main()
