"""The compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest

import fklab._core_py as pure
from fklab import backend
from fklab.lattice import build_box

try:
    import fklab._core as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")


def random_setup(seed, t=2, mode="wired"):
    g = build_box(2, t, mode)
    rng = np.random.default_rng(seed)
    open_mask = (rng.random(g.n_edges) < 0.5).astype(np.uint8)
    return g, open_mask


@needs_compiled
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("mode", ["free", "wired", "periodic"])
def test_component_labels_agree(seed, mode):
    g, open_mask = random_setup(seed, mode=mode)
    args = (g.n_nodes, g.edges_u, g.edges_v, open_mask, g.fused_u, g.fused_v)
    a = backend.min_index_labels(compiled.component_roots(*args), g.n_vertices)
    b = backend.min_index_labels(pure.component_roots(*args), g.n_vertices)
    assert np.array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("seed", range(3))
def test_single_bond_sweep_agrees(seed):
    g, open_mask = random_setup(seed, mode="wired")
    adj = backend.adjacency_csr(g.n_nodes, g.edges_u, g.edges_v, g.fused_u, g.fused_v)
    uniforms = np.random.default_rng(100 + seed).random(g.n_edges)
    a = open_mask.copy()
    b = open_mask.copy()
    compiled.single_bond_sweep(g.n_nodes, g.edges_u, g.edges_v, a, *adj, 0.55, 1.7, uniforms)
    pure.single_bond_sweep(g.n_nodes, g.edges_u, g.edges_v, b, *adj, 0.55, 1.7, uniforms)
    assert np.array_equal(a, b)


@needs_compiled
def test_enumerate_counts_agree():
    g = build_box(2, 1, "wired")
    args = (g.n_nodes, g.edges_u, g.edges_v, g.fused_u, g.fused_v)
    ka, ma = compiled.enumerate_counts(*args)
    kb, mb = pure.enumerate_counts(*args)
    assert np.array_equal(ka, kb)
    assert np.array_equal(ma, mb)


def test_min_index_labels_canonical():
    # same partition, different raw labelings -> same canonical labels
    roots_a = np.array([7, 7, 2, 2, 7], dtype=np.int32)
    roots_b = np.array([0, 0, 1, 1, 0], dtype=np.int32)
    a = backend.min_index_labels(roots_a, 5)
    b = backend.min_index_labels(roots_b, 5)
    assert np.array_equal(a, b)
    assert np.array_equal(a, [0, 0, 2, 2, 0])


def test_adjacency_csr_structure():
    g = build_box(2, 1, "free")
    indptr, nbr, eid = backend.adjacency_csr(
        g.n_vertices, g.edges_u, g.edges_v, g.fused_u, g.fused_v)
    assert indptr[-1] == 2 * g.n_edges
    # neighbour lists reproduce the edge list
    pairs = set()
    for x in range(g.n_vertices):
        for a in range(indptr[x], indptr[x + 1]):
            pairs.add((x, int(nbr[a]), int(eid[a])))
    for j in range(g.n_edges):
        assert (int(g.edges_u[j]), int(g.edges_v[j]), j) in pairs
        assert (int(g.edges_v[j]), int(g.edges_u[j]), j) in pairs
