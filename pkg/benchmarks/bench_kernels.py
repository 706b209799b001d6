#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--repeats 5]

Covers the three hot paths (component labeling, cluster-update sweeps,
single-bond sweeps) and mask enumeration.  Both backends produce
bit-identical output, so this is purely a speed comparison.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import fklab._core_py as pure
from fklab import backend
from fklab.fk import FKParams, init_chain, sw_sweep, sweeny_sweep
from fklab.lattice import build_box

try:
    import fklab._core as compiled
except ImportError:
    compiled = None


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_components(impl, repeats):
    g = build_box(2, 32, "wired")
    rng = np.random.default_rng(0)
    cfg = (rng.random(g.n_edges) < 0.5).astype(np.uint8)

    def run():
        for _ in range(20):
            impl.component_roots(g.n_nodes, g.edges_u, g.edges_v, cfg,
                                 g.fused_u, g.fused_v)

    return timeit(run, repeats) / 20


def bench_sweeny(impl, repeats):
    g = build_box(2, 4, "free")
    adj = backend.adjacency_csr(g.n_vertices, g.edges_u, g.edges_v,
                                g.fused_u, g.fused_v)
    rng = np.random.default_rng(1)
    cfg = (rng.random(g.n_edges) < 0.5).astype(np.uint8)

    def run():
        for _ in range(200):
            impl.single_bond_sweep(g.n_vertices, g.edges_u, g.edges_v, cfg,
                                   *adj, 0.6, 2.0, rng.random(g.n_edges))

    return timeit(run, repeats) / 200


def bench_enumerate(impl, repeats):
    g = build_box(2, 1, "free")  # 12 edges -> 4096 masks

    def run():
        impl.enumerate_counts(g.n_nodes, g.edges_u, g.edges_v,
                              g.fused_u, g.fused_v)

    return timeit(run, repeats)


def bench_sw_end_to_end(repeats):
    """Full cluster-update sweeps through the public API (current backend)."""
    g = build_box(2, 32, "wired")
    st = init_chain(g, FKParams(0.8, 2.0, "wired"), "sw", seed=3)

    def run():
        for _ in range(50):
            sw_sweep(st)

    return timeit(run, repeats) / 50


def bench_sweeny_end_to_end(repeats):
    g = build_box(2, 1, "free")
    st = init_chain(g, FKParams(0.5, 2.0), "sweeny", seed=3)

    def run():
        for _ in range(2000):
            sweeny_sweep(st)

    return timeit(run, repeats) / 2000


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"active backend: {backend.BACKEND}")
    rows = []
    impls = [("python", pure)] + ([("compiled", compiled)] if compiled else [])
    for name, impl in impls:
        rows.append((f"component labeling, side-65 wired box ({name})",
                     bench_components(impl, args.repeats)))
    for name, impl in impls:
        rows.append((f"single-bond sweep, 9x9 box ({name})",
                     bench_sweeny(impl, args.repeats)))
    for name, impl in impls:
        rows.append((f"mask enumeration, 12 edges ({name})",
                     bench_enumerate(impl, args.repeats)))
    rows.append(("cluster-update sweep end-to-end, side-65 (active)",
                 bench_sw_end_to_end(args.repeats)))
    rows.append(("single-bond sweep end-to-end, 3x3 (active)",
                 bench_sweeny_end_to_end(args.repeats)))
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  seconds/op")
    for name, secs in rows:
        print(f"{name:<{width}}  {secs:.3e}")
    if compiled:
        c = bench_components(compiled, args.repeats)
        p = bench_components(pure, args.repeats)
        print(f"\ncompiled speedup on labeling: {p / c:.1f}x")


if __name__ == "__main__":
    main()
