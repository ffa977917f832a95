"""Compiled vs pure-numpy kernels at the V=2047, d=50 working size.

    python3 benchmarks/bench_kernels.py [--repeats 3]
"""
import argparse
import time

import numpy as np

from rescal_transitive import _fallback
from rescal_transitive.graph import build_complete_binary_tree, edge_partitions, transitive_closure
from rescal_transitive.training import SUBSET, TrainConfig, subset_training_pairs

try:
    from rescal_transitive import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--d", type=int, default=50)
    args = parser.parse_args()

    parts = edge_partitions(transitive_closure(build_complete_binary_tree(11)))
    pairs = subset_training_pairs(parts, TrainConfig(mode=SUBSET, d=args.d))
    rng = np.random.default_rng(0)
    A0 = rng.uniform(-0.1, 0.1, (parts.num_vertices, args.d))
    M0 = rng.uniform(-0.1, 0.1, (2, args.d, args.d))
    order = rng.permutation(len(pairs)).astype(np.int64)
    D = np.ascontiguousarray(M0[1] - M0[0])
    ec = parts.sample_ec(1_000_000, 0)
    subs, objs = np.ascontiguousarray(ec[:, 0]), np.ascontiguousarray(ec[:, 1])

    impls = [("fallback", _fallback)] + ([("compiled", compiled)] if compiled else [])
    results = {}
    for name, impl in impls:
        def epoch():
            impl.sgd_epoch(A0.copy(), M0.copy(), pairs.subs, pairs.objs, pairs.labels, order,
                           0.05, 1e-7, 32)

        def score():
            impl.bilinear_pairs(A0, D, subs, objs)

        results[name] = (best_of(epoch, args.repeats), best_of(score, args.repeats))

    print(f"V={parts.num_vertices} d={args.d} pairs/epoch={len(pairs)} scored pairs={len(ec)}")
    print(f"{'backend':<10} {'sgd_epoch [s]':>14} {'bilinear_pairs [s]':>19}")
    for name, (t_epoch, t_score) in results.items():
        print(f"{name:<10} {t_epoch:>14.3f} {t_score:>19.3f}")
    if compiled:
        f, c = results["fallback"], results["compiled"]
        print(f"speedup    {f[0] / c[0]:>13.1f}x {f[1] / c[1]:>18.1f}x")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
