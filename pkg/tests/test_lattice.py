import numpy as np
import pytest

from fklab.errors import InvalidParameterError, UnsupportedDimensionError
from fklab.lattice import (
    BoxGeometry,
    boundary_sites,
    build_box,
    dual_edge_of,
    dual_geometry,
    rect_box,
)


def brute_force_edges(g: BoxGeometry):
    coords = {tuple(c): i for i, c in enumerate(g.coords)}
    edges = set()
    for c, i in coords.items():
        for a in range(g.d):
            n = list(c)
            n[a] += 1
            j = coords.get(tuple(n))
            if j is not None:
                edges.add((min(i, j), max(i, j)))
    return edges


@pytest.mark.parametrize("d,t,n_vertices,n_edges", [
    (2, 0, 1, 0),
    (2, 1, 9, 12),
    (3, 1, 27, 54),
    (2, 3, 49, 84),
])
def test_box_counts(d, t, n_vertices, n_edges):
    g = build_box(d, t, "free")
    assert g.n_vertices == n_vertices
    assert g.n_edges == n_edges
    # closed form for the free inner-bond count
    assert g.n_edges == d * 2 * t * (2 * t + 1) ** (d - 1)


@pytest.mark.parametrize("d,t", [(2, 1), (2, 2), (3, 1)])
def test_edges_match_enumeration(d, t):
    g = build_box(d, t, "free")
    got = {(min(int(u), int(v)), max(int(u), int(v)))
           for u, v in zip(g.edges_u, g.edges_v)}
    assert got == brute_force_edges(g)


def test_edge_order_deterministic():
    a = build_box(2, 2, "free")
    b = build_box(2, 2, "free")
    assert np.array_equal(a.edges_u, b.edges_u)
    assert np.array_equal(a.edges_v, b.edges_v)


@pytest.mark.parametrize("d,t,count", [(2, 1, 12), (2, 0, 4), (3, 1, 54)])
def test_boundary_counts(d, t, count):
    g = build_box(d, t, "free")
    b = boundary_sites(g)
    assert b.shape == (count, d)
    # every boundary site is outside the box and L1-adjacent to it
    inside = {tuple(c) for c in g.coords}
    for y in b:
        assert tuple(y) not in inside
        assert any(
            tuple(y + e) in inside
            for e in np.concatenate([np.eye(d, dtype=int), -np.eye(d, dtype=int)]))


def test_boundary_empty_on_torus():
    g = build_box(2, 2, "periodic")
    assert boundary_sites(g).shape == (0, 2)


def test_periodic_edges_wrap():
    g = build_box(2, 1, "periodic")
    # torus with side 3: every vertex has degree 4, |E| = 2 * 9
    assert g.n_edges == 18
    deg = np.bincount(np.concatenate([g.edges_u, g.edges_v]), minlength=9)
    assert np.all(deg == 4)


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        build_box(1, 2)
    with pytest.raises(InvalidParameterError):
        build_box(2, -1)
    with pytest.raises(InvalidParameterError):
        build_box(2, 2, "moebius")


def test_wired_ghost_fusion():
    g = build_box(2, 1, "wired")
    assert g.n_nodes == g.n_vertices + 1
    # all 8 sites on the rim of the 3x3 box fuse to the ghost
    assert g.fused_u.shape[0] == 8
    assert np.all(g.fused_v == g.ghost)


def test_dual_geometry_example():
    g = build_box(2, 1, "free")
    dual = dual_geometry(g)
    idx = next(i for i in range(g.n_edges)
               if {tuple(g.coords[g.edges_u[i]]), tuple(g.coords[g.edges_v[i]])}
               == {(0, 0), (1, 0)})
    assert dual.dual_edge_halves(idx) == ((0.5, -0.5), (0.5, 0.5))


def test_dual_involution_and_counts():
    g = build_box(2, 2, "free")
    dual = dual_geometry(g)
    assert len(dual.dual_edges) == g.n_edges
    assert len(set(dual.dual_edges)) == g.n_edges  # bijection
    doubled = g.coords * 2
    for i in range(g.n_edges):
        primal = (tuple(doubled[g.edges_u[i]]), tuple(doubled[g.edges_v[i]]))
        assert dual_edge_of(dual.dual_edges[i]) == tuple(sorted(primal))


def test_dual_needs_d2():
    with pytest.raises(UnsupportedDimensionError):
        dual_geometry(build_box(3, 1, "free"))


def test_rect_box_shapes():
    g = rect_box((2, 3))
    assert g.n_vertices == 6
    assert g.n_edges == 7
    with pytest.raises(InvalidParameterError):
        rect_box((5,))


def test_interior_mask():
    g = build_box(2, 4, "free")
    m = g.interior_mask(2)
    assert m.sum() == 5 * 5
    assert np.all(np.abs(g.coords[m]).max(axis=1) <= 2)
