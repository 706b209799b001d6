"""Finite boxes of Z^d: vertices, inner bonds, boundaries and the planar dual.

A box is either the symmetric L-infinity ball of radius t (vertices at
coordinates -t..t per axis, side 2t+1) or a general rectangular block.
Vertices are enumerated row-major over coordinates and edges row-major
over (vertex, axis), so the orderings are reproducible from the shape
alone.  Wired boundary conditions are realised by one extra ghost node
fused to every vertex of the inner boundary with always-open bonds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError, UnsupportedDimensionError

MODES = ("free", "wired", "periodic")


@dataclass(frozen=True)
class BoxGeometry:
    """Immutable box geometry; safe to share across workers."""

    d: int
    shape: tuple[int, ...]          # vertices per axis
    mode: str                       # free | wired | periodic
    t: int | None = None            # radius when built as a symmetric box
    edges_u: np.ndarray = field(repr=False, default=None)
    edges_v: np.ndarray = field(repr=False, default=None)

    @property
    def n_vertices(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_edges(self) -> int:
        return int(self.edges_u.shape[0])

    @property
    def wired(self) -> bool:
        return self.mode == "wired"

    @property
    def n_nodes(self) -> int:
        """Vertex count including the ghost node in wired mode."""
        return self.n_vertices + (1 if self.wired else 0)

    @property
    def ghost(self) -> int | None:
        return self.n_vertices if self.wired else None

    @cached_property
    def coords(self) -> np.ndarray:
        """(n_vertices, d) integer coordinates in row-major vertex order."""
        grids = np.indices(self.shape).reshape(self.d, -1).T
        if self.t is not None:
            grids = grids - self.t
        return np.ascontiguousarray(grids, dtype=np.int64)

    @cached_property
    def inner_boundary(self) -> np.ndarray:
        """Indices of vertices with a neighbour outside the box (empty for periodic)."""
        if self.mode == "periodic":
            return np.empty(0, dtype=np.int32)
        c = self.coords if self.t is None else self.coords + self.t
        on_edge = np.zeros(self.n_vertices, dtype=bool)
        for a, size in enumerate(self.shape):
            on_edge |= (c[:, a] == 0) | (c[:, a] == size - 1)
        return np.flatnonzero(on_edge).astype(np.int32)

    @cached_property
    def fused_u(self) -> np.ndarray:
        """Always-open bond tails (ghost fusion); empty unless wired."""
        if not self.wired:
            return np.empty(0, dtype=np.int32)
        return self.inner_boundary

    @cached_property
    def fused_v(self) -> np.ndarray:
        if not self.wired:
            return np.empty(0, dtype=np.int32)
        return np.full(self.inner_boundary.shape[0], self.ghost, dtype=np.int32)

    def vertex_index(self, coord) -> int:
        c = np.asarray(coord, dtype=np.int64)
        if self.t is not None:
            c = c + self.t
        idx = 0
        for a in range(self.d):
            if not 0 <= c[a] < self.shape[a]:
                raise InvalidParameterError(f"coordinate {coord} outside the box")
            idx = idx * self.shape[a] + int(c[a])
        return idx

    def interior_mask(self, margin: int) -> np.ndarray:
        """Vertices at distance >= margin from every side (all vertices for periodic)."""
        if margin < 0:
            raise InvalidParameterError("margin must be >= 0")
        if self.mode == "periodic" or margin == 0:
            return np.ones(self.n_vertices, dtype=bool)
        c = self.coords if self.t is None else self.coords + self.t
        ok = np.ones(self.n_vertices, dtype=bool)
        for a, size in enumerate(self.shape):
            ok &= (c[:, a] >= margin) & (c[:, a] <= size - 1 - margin)
        return ok


def _build_edges(shape: tuple[int, ...], periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    d = len(shape)
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]
    n = int(np.prod(shape))
    grids = np.indices(shape).reshape(d, -1)  # (d, n) in row-major order
    eu, ev = [], []
    idx = np.arange(n, dtype=np.int64)
    # per-vertex, per-axis order; built axis-wise then re-sorted by (vertex, axis)
    for a in range(d):
        if shape[a] == 1:
            continue
        coord = grids[a]
        if periodic:
            nbr = idx + np.where(coord == shape[a] - 1, -(shape[a] - 1) * strides[a], strides[a])
            keep = np.ones(n, dtype=bool)
        else:
            nbr = idx + strides[a]
            keep = coord < shape[a] - 1
        eu.append(np.stack([idx[keep], np.full(keep.sum(), a, dtype=np.int64)], axis=1))
        ev.append(nbr[keep])
    if not eu:
        return np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32)
    tagged = np.concatenate(eu)
    tails = np.concatenate(ev)
    order = np.lexsort((tagged[:, 1], tagged[:, 0]))
    return (tagged[order, 0].astype(np.int32), tails[order].astype(np.int32))


def rect_box(shape, mode: str = "free") -> BoxGeometry:
    """Rectangular block with the given vertex counts per axis."""
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2:
        raise InvalidParameterError("dimension must be >= 2")
    if any(s < 1 for s in shape):
        raise InvalidParameterError("every side needs at least one vertex")
    if mode not in MODES:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    if mode == "periodic" and any(s == 2 for s in shape):
        raise InvalidParameterError("periodic sides of length 2 would duplicate bonds")
    eu, ev = _build_edges(shape, mode == "periodic")
    return BoxGeometry(d=len(shape), shape=shape, mode=mode, t=None, edges_u=eu, edges_v=ev)


def build_box(d: int, t: int, mode: str = "free") -> BoxGeometry:
    """Symmetric box of radius t: vertices at L-infinity distance <= t from the origin."""
    if d < 2:
        raise InvalidParameterError("dimension must be >= 2")
    if t < 0:
        raise InvalidParameterError("radius t must be >= 0")
    if mode not in MODES:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    side = 2 * t + 1
    eu, ev = _build_edges((side,) * d, mode == "periodic")
    return BoxGeometry(d=d, shape=(side,) * d, mode=mode, t=t, edges_u=eu, edges_v=ev)


def boundary_sites(g: BoxGeometry) -> np.ndarray:
    """Outer boundary: sites outside the box at L1 distance 1 from it.

    Empty for periodic boxes (a torus has no boundary).  Returned as an
    (n, d) coordinate array sorted row-major.
    """
    if g.mode == "periodic":
        return np.empty((0, g.d), dtype=np.int64)
    out = []
    lo = np.zeros(g.d, dtype=np.int64) - (g.t if g.t is not None else 0)
    hi = lo + np.asarray(g.shape, dtype=np.int64) - 1
    for a in range(g.d):
        inner_shape = [g.shape[i] for i in range(g.d) if i != a]
        grid = np.indices(inner_shape).reshape(g.d - 1, -1).T
        for bound in (lo[a] - 1, hi[a] + 1):
            pts = np.empty((grid.shape[0], g.d), dtype=np.int64)
            cols = [i for i in range(g.d) if i != a]
            for j, i in enumerate(cols):
                pts[:, i] = grid[:, j] + lo[i]
            pts[:, a] = bound
            out.append(pts)
    pts = np.concatenate(out)
    order = np.lexsort(tuple(pts[:, a] for a in range(g.d - 1, -1, -1)))
    return pts[order]


@dataclass(frozen=True)
class DualGeometry:
    """Planar dual of a d=2 box's bond set.

    Dual sites live on the shifted lattice Z^2 + (1/2, 1/2); they are kept
    as integer pairs in doubled coordinates (odd/odd) so the crossing map
    stays exact.  ``dual_edges[i]`` crosses primal edge i.
    """

    primal: BoxGeometry
    dual_edges: tuple[tuple[tuple[int, int], tuple[int, int]], ...]

    @property
    def dual_vertices(self) -> tuple[tuple[int, int], ...]:
        seen = sorted({p for e in self.dual_edges for p in e})
        return tuple(seen)

    def dual_edge_halves(self, i: int) -> tuple[tuple[float, float], tuple[float, float]]:
        (a, b), (c, d_) = self.dual_edges[i]
        return ((a / 2.0, b / 2.0), (c / 2.0, d_ / 2.0))


def _crossing(a: tuple[int, int], b: tuple[int, int]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Endpoints of the segment crossing a-b at right angles (doubled coords)."""
    mx, my = (a[0] + b[0]) // 2, (a[1] + b[1]) // 2
    if a[1] == b[1]:  # horizontal -> vertical crossing
        return ((mx, my - 1), (mx, my + 1))
    return ((mx - 1, my), (mx + 1, my))


def dual_geometry(g: BoxGeometry) -> DualGeometry:
    """Map every primal bond to the unique dual bond crossing it (d = 2 only)."""
    if g.d != 2:
        raise UnsupportedDimensionError("planar duality needs d = 2")
    doubled = g.coords * 2
    edges = []
    for i in range(g.n_edges):
        a = tuple(doubled[g.edges_u[i]])
        b = tuple(doubled[g.edges_v[i]])
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 2:
            raise InvalidParameterError("duality is not defined across wrap bonds")
        lo, hi = _crossing(a, b)
        edges.append((lo, hi))
    return DualGeometry(primal=g, dual_edges=tuple(edges))


def dual_edge_of(endpoints) -> tuple[tuple[int, int], tuple[int, int]]:
    """Crossing map on doubled coordinates; applying it twice returns the input."""
    a, b = (tuple(endpoints[0]), tuple(endpoints[1]))
    return _crossing(a, b)
