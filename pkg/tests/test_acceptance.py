"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerance."""
import functools
import time

import numpy as np

from rescal_transitive.evaluation import evaluate_all
from rescal_transitive.graph import build_complete_binary_tree, edge_partitions, transitive_closure
from rescal_transitive.model import RescalModel, classify_pair
from rescal_transitive.theory import (sampled_transitivity_check, separating_vector,
                                      symmetry_defect, transitivity_violation_witness)
from rescal_transitive.training import (FULLSET, SUBSET, LabeledPair, TrainConfig, gradient,
                                        pair_loss, train)

from conftest import record_criterion, tree_partitions

SEEDS = (0, 1, 2)


@functools.lru_cache(maxsize=None)
def depth11_accuracies(mode):
    parts = tree_partitions(11)
    reports = [evaluate_all(train(parts, TrainConfig(mode=mode, d=50, seed=s)), parts) for s in SEEDS]
    return 100 * np.mean([r.accuracies() for r in reports], axis=0)


def test_structural_exactness():
    start = time.perf_counter()
    parts = edge_partitions(transitive_closure(build_complete_binary_tree(11)))
    elapsed = time.perf_counter() - start
    ok = parts.num_e == 18434 and parts.num_ec == 4171775 and elapsed < 10
    assert record_criterion("structural exactness", ok,
                            f"|E|={parts.num_e} |E^c|={parts.num_ec} in {elapsed:.2f}s")


def test_fullset_cell_v2047_d50():
    start = time.perf_counter()
    e, ec, erev = depth11_accuracies(FULLSET)
    elapsed = time.perf_counter() - start
    ok = abs(e - 66) <= 10 and abs(ec - 100) <= 2 and abs(erev - 100) <= 2 and elapsed <= 1800
    assert record_criterion("FullSet V=2047 d=50", ok,
                            f"E={e:.1f} Ec={ec:.1f} Erev={erev:.1f} (3 seeds, {elapsed:.1f}s)")


def test_fullset_trends():
    start = time.perf_counter()
    depths, dims = (7, 8, 9), (16, 32, 64)
    grid = np.zeros((3, 3))
    for i, depth in enumerate(depths):
        parts = tree_partitions(depth)
        for j, d in enumerate(dims):
            grid[i, j] = np.mean([evaluate_all(train(parts, TrainConfig(d=d, seed=s)), parts).acc_e
                                  for s in SEEDS])
    elapsed = time.perf_counter() - start
    up_in_d = bool(np.all(np.diff(grid, axis=1) >= 0))
    down_in_v = bool(np.all(np.diff(grid, axis=0) <= 0))
    ok = up_in_d and down_in_v and elapsed <= 600
    rows = "; ".join(f"depth {dep}: " + " ".join(f"{100 * x:.1f}" for x in row)
                     for dep, row in zip(depths, grid))
    assert record_criterion("FullSet trends", ok, f"acc_E by d=16/32/64 [{rows}] in {elapsed:.1f}s")


def test_subset_failure_mode():
    e, ec, erev = depth11_accuracies(SUBSET)
    ok = e >= 95 and erev <= 65 and e - erev >= 30
    assert record_criterion("SubSet failure mode", ok,
                            f"E={e:.1f} Ec={ec:.1f} Erev={erev:.1f} gap={e - erev:.1f}")


def test_witness_suite():
    rng = np.random.default_rng(2024)
    worst, failures, done = 0.0, 0, 0
    while done < 100:
        d = int(rng.integers(2, 21))
        M = rng.standard_normal((d, d)) + rng.uniform(0, 3) * np.eye(d)
        if symmetry_defect(M) <= 0.1:
            continue
        start = time.perf_counter()
        w = transitivity_violation_witness(M, seed=done)
        worst = max(worst, time.perf_counter() - start)
        ab, bc, ac = w.a @ M @ w.b, w.b @ M @ w.c, w.a @ M @ w.c
        failures += not (ab > 1e-9 and bc > 1e-9 and ac <= 0)
        done += 1
    ok = failures == 0 and worst < 1.0
    assert record_criterion("witness suite", ok,
                            f"{done - failures}/100 verified, slowest {1000 * worst:.1f} ms")


def test_transitivity_oracle_agreement():
    u = np.random.default_rng(7).standard_normal(4)
    rank_one = sampled_transitivity_check(np.outer(u, u), 100_000, seed=0)
    identity = sampled_transitivity_check(np.eye(2), 10_000, seed=0)
    ok = rank_one is None and identity is not None and identity.verify(np.eye(2))
    assert record_criterion("transitivity oracle agreement", ok,
                            f"rank-1 PSD violation={rank_one is not None}, "
                            f"identity violation={identity is not None}")


def test_separating_vector_construction():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 10))
        x, y = rng.standard_normal(d), rng.standard_normal(d)
        z = separating_vector(x, y)
        worst = max(worst, abs(z @ x - 1), abs(z @ y + 1))
    ok = worst <= 1e-9
    assert record_criterion("separating vector", ok, f"max error {worst:.2e} over 1000 pairs")


def test_gradient_correctness():
    rng = np.random.default_rng(3)
    V, d, h, reg = 20, 6, 1e-5, 0.01
    A = rng.standard_normal((V, d)) * 0.5
    M = rng.standard_normal((2, d, d)) * 0.5
    model = RescalModel(A, M)
    worst = 0.0
    for k in range(100):
        pair = LabeledPair(int(rng.integers(V)), int(rng.integers(V)), float(k % 2))
        g = gradient(model, pair, reg)
        if rng.random() < 0.5:
            theta, grad = model.A, g.A
            idx = (int(rng.choice([pair.sub, pair.obj])), int(rng.integers(d)))
        else:
            theta, grad = model.M, g.M
            idx = (int(rng.integers(2)), int(rng.integers(d)), int(rng.integers(d)))
        old = theta[idx]
        theta[idx] = old + h
        up = pair_loss(model, pair, reg)
        theta[idx] = old - h
        down = pair_loss(model, pair, reg)
        theta[idx] = old
        fd = (up - down) / (2 * h)
        worst = max(worst, abs(fd - grad[idx]) / max(abs(fd), abs(grad[idx]), 1e-8))
    ok = worst < 1e-4
    assert record_criterion("gradient correctness", ok, f"max relative error {worst:.2e} on 100 coordinates")


def test_als_monotonicity():
    parts = tree_partitions(7)
    worst = -np.inf
    for d, init in ((16, "nvecs"), (32, "nvecs"), (16, "random")):
        history = train(parts, TrainConfig(d=d, init=init, sweeps=30)).meta["loss_history"]
        rises = [(b - a) / abs(a) for a, b in zip(history, history[1:])]
        worst = max(worst, max(rises))
    ok = worst <= 1e-8
    assert record_criterion("ALS monotonicity", ok, f"largest relative increase {worst:.2e}")


def test_symmetric_model_corollary():
    parts = tree_partitions(5)
    base = train(parts, TrainConfig(d=8, seed=0))
    M = (base.M + base.M.transpose(0, 2, 1)) / 2
    model = RescalModel(base.A, M)
    V = parts.num_vertices
    mismatches = sum(classify_pair(model, v, w) != classify_pair(model, w, v)
                     for v in range(V) for w in range(v + 1, V))
    ok = mismatches == 0
    assert record_criterion("symmetric-model corollary", ok,
                            f"{mismatches} asymmetric decisions over {V * (V - 1) // 2} pairs")
