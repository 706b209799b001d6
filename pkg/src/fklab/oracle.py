"""Brute-force enumeration of the random-cluster measure on tiny graphs.

Ground truth for everything else: exact probabilities, covariances,
positive-association checks, planar duality on matched boxes, and exact
cluster-size laws.  Hard cap at 24 enumerated edges.

Matched-box duality: the planar dual of an (r x c)-vertex free box is
its face graph, the (r-1) x (c-1) block of plaquettes plus one outer
node collecting every boundary crossing (a multigraph: corner
plaquettes carry two bonds to the outer node).  With dual edge i
crossing primal edge i and the open/closed flip, the free measure at
(p, q) maps exactly onto the dual measure at (p*, q); the outer node
realises wired boundary conditions on the plaquette block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import xlogy

from . import backend
from .errors import (
    ContractViolationError,
    InvalidParameterError,
    TooManyEdgesError,
)
from .lattice import BoxGeometry, rect_box

EDGE_CAP = 24


@dataclass(frozen=True)
class EnumGraph:
    """A small multigraph with optional always-open bonds and proxy anchors."""

    n_nodes: int
    edges_u: np.ndarray
    edges_v: np.ndarray
    fused_u: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int32))
    fused_v: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int32))
    proxy_nodes: tuple[int, ...] = ()   # clusters touching these stand in for infinity
    n_real: int | None = None           # vertices counted in cluster sizes

    @property
    def n_edges(self) -> int:
        return int(self.edges_u.shape[0])

    @property
    def real_count(self) -> int:
        return self.n_nodes if self.n_real is None else self.n_real


def graph_from_geometry(g: BoxGeometry) -> EnumGraph:
    proxy = ()
    n_real = g.n_vertices
    if g.mode == "wired":
        proxy = (g.ghost,)
    elif g.mode == "free":
        proxy = tuple(int(i) for i in g.inner_boundary)
    return EnumGraph(n_nodes=g.n_nodes,
                     edges_u=g.edges_u, edges_v=g.edges_v,
                     fused_u=g.fused_u, fused_v=g.fused_v,
                     proxy_nodes=proxy, n_real=n_real)


def small_graph(n_nodes: int, edges: Sequence[tuple[int, int]],
                fused: Sequence[tuple[int, int]] = (),
                proxy_nodes: Sequence[int] = ()) -> EnumGraph:
    e = np.asarray(edges, dtype=np.int32).reshape(-1, 2)
    f = np.asarray(list(fused), dtype=np.int32).reshape(-1, 2)
    return EnumGraph(n_nodes=n_nodes,
                     edges_u=np.ascontiguousarray(e[:, 0]),
                     edges_v=np.ascontiguousarray(e[:, 1]),
                     fused_u=np.ascontiguousarray(f[:, 0]),
                     fused_v=np.ascontiguousarray(f[:, 1]),
                     proxy_nodes=tuple(proxy_nodes))


@dataclass(frozen=True)
class ExactDistribution:
    """Exact measure over the 2^m edge bitmasks of a small graph."""

    graph: EnumGraph
    p: float
    q: float
    probs: np.ndarray
    log_z: float
    k_counts: np.ndarray
    open_counts: np.ndarray

    @property
    def n_edges(self) -> int:
        return self.graph.n_edges

    @property
    def z(self) -> float:
        return math.exp(self.log_z)

    @cached_property
    def edge_marginals(self) -> np.ndarray:
        m = self.n_edges
        cube = self.probs.reshape((2,) * m) if m else self.probs
        out = np.empty(m)
        for j in range(m):
            axes = tuple(a for a in range(m) if a != m - 1 - j)
            out[j] = cube.sum(axis=axes)[1] if axes else cube[1]
        return out


def enumerate_distribution(graph: EnumGraph | BoxGeometry, p: float, q: float) -> ExactDistribution:
    """Exact distribution via the weight of every bitmask (log-sum-exp normalised)."""
    if isinstance(graph, BoxGeometry):
        graph = graph_from_geometry(graph)
    if not 0.0 <= p <= 1.0 or q <= 0.0:
        raise InvalidParameterError("need p in [0,1] and q > 0")
    if graph.n_edges > EDGE_CAP:
        raise TooManyEdgesError(
            f"{graph.n_edges} edges exceed the enumeration cap of {EDGE_CAP}")
    k, m1 = backend.enumerate_counts(
        graph.n_nodes, graph.edges_u, graph.edges_v, graph.fused_u, graph.fused_v)
    k = k.astype(np.float64)
    m1 = m1.astype(np.float64)
    logw = xlogy(m1, p) + xlogy(graph.n_edges - m1, 1.0 - p) + k * math.log(q)
    top = logw.max()
    w = np.exp(logw - top)
    total = w.sum()
    return ExactDistribution(graph=graph, p=p, q=q, probs=w / total,
                             log_z=float(top + math.log(total)),
                             k_counts=k.astype(np.uint8), open_counts=m1.astype(np.uint8))


# ---------------------------------------------------------------- events

Event = np.ndarray  # bool per bitmask


def event_from_predicate(dist: ExactDistribution,
                         pred: Callable[[int, np.ndarray], bool]) -> Event:
    """Materialise pred(mask, open_bits) over all configurations."""
    m = dist.n_edges
    out = np.empty(1 << m, dtype=bool)
    bits = np.empty(m, dtype=np.uint8)
    for mask in range(1 << m):
        for j in range(m):
            bits[j] = (mask >> j) & 1
        out[mask] = bool(pred(mask, bits))
    return out


def edge_open_event(dist: ExactDistribution, j: int) -> Event:
    masks = np.arange(1 << dist.n_edges, dtype=np.int64)
    return ((masks >> j) & 1).astype(bool)


def _mask_roots(graph: EnumGraph, mask: int) -> np.ndarray:
    bits = np.zeros(graph.n_edges, dtype=np.uint8)
    for j in range(graph.n_edges):
        bits[j] = (mask >> j) & 1
    return backend.component_roots(graph.n_nodes, graph.edges_u, graph.edges_v,
                                   bits, graph.fused_u, graph.fused_v)


def connection_event(dist: ExactDistribution, x: int, y: int) -> Event:
    g = dist.graph
    out = np.empty(1 << g.n_edges, dtype=bool)
    for mask in range(out.shape[0]):
        roots = _mask_roots(g, mask)
        out[mask] = roots[x] == roots[y]
    return out


def proxy_event(dist: ExactDistribution, x: int) -> Event:
    """x belongs to a cluster touching the proxy anchors (boundary/ghost)."""
    g = dist.graph
    if not g.proxy_nodes:
        raise InvalidParameterError("graph has no proxy anchors")
    anchors = np.asarray(g.proxy_nodes)
    out = np.empty(1 << g.n_edges, dtype=bool)
    for mask in range(out.shape[0]):
        roots = _mask_roots(g, mask)
        out[mask] = bool(np.any(roots[anchors] == roots[x]))
    return out


def event_probability(dist: ExactDistribution, event: Event) -> float:
    return float(dist.probs[np.asarray(event, dtype=bool)].sum())


def covariance(dist: ExactDistribution, a: Event, b: Event) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    return float(dist.probs[a & b].sum() - dist.probs[a].sum() * dist.probs[b].sum())


def is_increasing_event(dist: ExactDistribution, event: Event) -> bool:
    """Full check: opening any single edge never leaves the event."""
    m = dist.n_edges
    cube = np.asarray(event, dtype=bool).reshape((2,) * m)
    for j in range(m):
        a0 = np.take(cube, 0, axis=m - 1 - j)
        a1 = np.take(cube, 1, axis=m - 1 - j)
        if np.any(a0 & ~a1):
            return False
    return True


def fkg_check(dist: ExactDistribution, events: Sequence[Event]) -> float:
    """Worst pairwise covariance over a family of increasing events.

    Positive association (q >= 1) predicts the result is >= -1e-12; a
    non-increasing input is a caller bug and raises.
    """
    for i, ev in enumerate(events):
        if not is_increasing_event(dist, ev):
            raise ContractViolationError(f"event #{i} is not increasing")
    worst = math.inf
    for i in range(len(events)):
        for j in range(i, len(events)):
            worst = min(worst, covariance(dist, events[i], events[j]))
    return worst


# ---------------------------------------------------------------- duality

def dual_p(p: float, q: float) -> float:
    """Dual bond density: the odds map p/(1-p) -> q(1-p)/p, fixed by sqrt(q)/(1+sqrt(q)).

    Boundary convention: 0 and 1 are swapped.
    """
    if q <= 0.0:
        raise InvalidParameterError("q must be > 0")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("p must be in [0,1]")
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    return q * (1.0 - p) / (p + q * (1.0 - p))


def self_dual_point(q: float) -> float:
    if q <= 0.0:
        raise InvalidParameterError("q must be > 0")
    r = math.sqrt(q)
    return r / (1.0 + r)


def dual_box_pair(rows: int, cols: int) -> tuple[EnumGraph, EnumGraph]:
    """Free (rows x cols)-vertex box and its exact planar dual (matched boxes).

    Dual edge i crosses primal edge i; the dual's last node is the outer
    plaquette.  Enumerating the primal at (p, q) and the dual at (p*, q)
    with the open/closed flip gives identical event probabilities.
    """
    if rows < 2 or cols < 2:
        raise InvalidParameterError("need at least a 2x2 box")
    g = rect_box((rows, cols), "free")
    fr, fc = rows - 1, cols - 1
    outer = fr * fc

    def face(i: int, j: int) -> int:
        if 0 <= i < fr and 0 <= j < fc:
            return i * fc + j
        return outer

    coords = g.coords
    du, dv = [], []
    for e in range(g.n_edges):
        a0, a1 = coords[g.edges_u[e]]
        b0, b1 = coords[g.edges_v[e]]
        if b0 == a0 + 1:          # step along axis 0: squares on either side in axis 1
            du.append(face(a0, a1 - 1))
            dv.append(face(a0, a1))
        else:                      # step along axis 1
            du.append(face(a0 - 1, a1))
            dv.append(face(a0, a1))
    dual = EnumGraph(n_nodes=outer + 1,
                     edges_u=np.asarray(du, dtype=np.int32),
                     edges_v=np.asarray(dv, dtype=np.int32),
                     proxy_nodes=(outer,))
    return graph_from_geometry(g), dual


def flip_mask(mask: int, n_edges: int) -> int:
    return ((1 << n_edges) - 1) ^ mask


def duality_check(rows: int, cols: int, p: float, q: float,
                  events: Sequence[Event] | None = None) -> float:
    """Max |primal(A) - dual(A*)| over the event battery (0 up to rounding).

    The primal side is the free box at (p, q); the dual side the matched
    plaquette graph at (p*, q); A* flips every edge through the crossing
    bijection.
    """
    primal, dual = dual_box_pair(rows, cols)
    dp = enumerate_distribution(primal, p, q)
    dd = enumerate_distribution(dual, dual_p(p, q), q)
    m = primal.n_edges
    masks = np.arange(1 << m, dtype=np.int64)
    flipped = ((1 << m) - 1) ^ masks
    dual_probs_on_primal = dd.probs[flipped]
    if events is None:
        events = [np.ones(1 << m, dtype=bool)]
        events += [edge_open_event(dp, j) for j in range(m)]
        events.append(connection_event(dp, 0, primal.real_count - 1))
    worst = 0.0
    for ev in events:
        ev = np.asarray(ev, dtype=bool)
        gap = abs(float(dp.probs[ev].sum()) - float(dual_probs_on_primal[ev].sum()))
        worst = max(worst, gap)
    return worst


# ---------------------------------------------------------------- cluster laws

@dataclass(frozen=True)
class ClusterSizeLaw:
    """Exact law of |C(x)| with the proxy membership split out."""

    sizes: np.ndarray            # P(|C(x)| = s), s = 0..n_real (index 0 unused)
    finite_sizes: np.ndarray     # P(|C(x)| = s and x not in proxy)
    theta: float                 # P(x in proxy)
    chi_finite: float            # sum s * P(size s, finite)


def cluster_size_law(dist: ExactDistribution, x: int) -> ClusterSizeLaw:
    g = dist.graph
    n_real = g.real_count
    sizes = np.zeros(n_real + 1)
    finite = np.zeros(n_real + 1)
    theta = 0.0
    anchors = np.asarray(g.proxy_nodes) if g.proxy_nodes else None
    ghost_anchored = anchors is not None and bool(np.any(anchors >= n_real))
    for mask in range(1 << g.n_edges):
        roots = _mask_roots(g, mask)
        s = int(np.sum(roots[:n_real] == roots[x]))
        pr = float(dist.probs[mask])
        sizes[s] += pr
        in_proxy = anchors is not None and bool(np.any(roots[anchors] == roots[x]))
        if in_proxy and not ghost_anchored and s < 2:
            # free boxes: an isolated rim site is not boundary-connected
            in_proxy = False
        if in_proxy:
            theta += pr
        else:
            finite[s] += pr
    chi = float(np.dot(np.arange(n_real + 1), finite))
    return ClusterSizeLaw(sizes=sizes, finite_sizes=finite, theta=theta, chi_finite=chi)


def euler_split(graph: EnumGraph, mask: int) -> tuple[int, int]:
    """(open edge count, component count) of one bitmask; duality bookkeeping aid."""
    roots = _mask_roots(graph, mask)
    return bin(mask).count("1"), int(np.unique(roots).shape[0])
