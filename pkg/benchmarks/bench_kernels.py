#!/usr/bin/env python3
"""Benchmark the JIT-compiled kernels against their pure-Python definitions.

The structure-search kernel dominates bootstrap runtime, so this is the number
that decides whether a 3000-replicate run takes minutes or days.  The jitted
path is used automatically when numba is importable; ``ATTACHNET_JIT=0``
selects the fallback.

    python benchmarks/bench_kernels.py --nodes 20 --rows 1000 --repeats 3
"""
import argparse
import time

import numpy as np

from attachnet import _kernels
from attachnet.score import stats_from_matrix


def synthetic_problem(nodes: int, rows: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    order = rng.permutation(nodes)
    data = np.zeros((rows, nodes))
    for pos, j in enumerate(order):
        col = rng.normal(size=rows)
        for prev in range(max(0, pos - 3), pos):
            if rng.random() < 0.5:
                col += rng.uniform(-1, 1) * data[:, order[prev]]
        data[:, j] = col
    return data


def time_fn(fn, *args, repeats: int):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--nodes", type=int, default=20)
    parser.add_argument("--rows", type=int, default=1000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--skip-pure-search", action="store_true",
                        help="only benchmark the jitted search (the pure one is slow)")
    args = parser.parse_args()

    if not _kernels.JIT_ENABLED:
        parser.error("run with numba available and ATTACHNET_JIT unset to compare paths")

    data = synthetic_problem(args.nodes, args.rows)
    stats = stats_from_matrix(data, tuple(f"v{i}" for i in range(args.nodes)))

    print(f"problem: {args.nodes} nodes x {args.rows} rows, best of {args.repeats}")
    print(f"{'kernel':<22} {'numba':>12} {'numpy':>12} {'speedup':>9}")

    # covariance
    jit_cov = _kernels.covariance_kernel
    pure_cov = _kernels.pure_python(_kernels.covariance_kernel)
    jit_cov(data)  # compile
    t_jit, r1 = time_fn(jit_cov, data, repeats=args.repeats)
    t_pure, r2 = time_fn(pure_cov, data, repeats=args.repeats)
    assert np.allclose(r1[1], r2[1])
    print(f"{'covariance':<22} {t_jit * 1e3:>10.2f}ms {t_pure * 1e3:>10.2f}ms {t_pure / t_jit:>8.1f}x")

    # full tabu search from the empty graph
    def run(search):
        adj = np.zeros((args.nodes, args.nodes), dtype=np.int8)
        return search(stats.cov, float(stats.n), adj, 10, 100, -1, 1e-8, 0)

    jit_search = _kernels.tabu_search_kernel
    run(jit_search)  # compile
    t_jit, (adj_jit, score_jit) = time_fn(lambda: run(jit_search), repeats=args.repeats)
    if args.skip_pure_search:
        print(f"{'tabu search':<22} {t_jit * 1e3:>10.2f}ms {'skipped':>12}")
        return
    pure_search = _kernels.pure_python(_kernels.tabu_search_kernel)
    t_pure, (adj_pure, score_pure) = time_fn(lambda: run(pure_search), repeats=max(1, args.repeats // 3))
    assert np.array_equal(adj_jit, adj_pure), "backends disagree on the learned graph"
    assert abs(score_jit - score_pure) < 1e-9
    print(f"{'tabu search':<22} {t_jit * 1e3:>10.2f}ms {t_pure * 1e3:>10.2f}ms {t_pure / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
