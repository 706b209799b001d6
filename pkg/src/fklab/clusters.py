"""Cluster decompositions and the functionals the limit theorems consume.

The infinite cluster has no finite-volume meaning, so a proxy stands in
for it: clusters touching the box boundary (free/wired boxes; under
wired conditions that is exactly the ghost cluster) or, on a torus, the
largest cluster (optionally: clusters winding around the torus).  Every
estimator that quotes the proxy records which rule produced it.

Translation-averaged estimators (two-point functions, tails,
covariances) run over an interior window, vertices at least ``margin``
sites from the boundary, to damp boundary effects.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .errors import InsufficientDataError, InvalidParameterError, InvalidWindowError
from .lattice import BoxGeometry

PROXY_RULES = ("boundary", "largest", "winding")


@dataclass(frozen=True)
class ClusterDecomposition:
    """Partition of the box into clusters of open bonds.

    ``labels[x]`` is the smallest vertex index in x's cluster, which makes
    the labeling canonical across kernel backends.  Sizes count real
    vertices only (never the ghost).
    """

    geometry: BoxGeometry
    labels: np.ndarray          # (n_vertices,) int32, canonical representative
    cluster_ids: np.ndarray     # sorted unique labels
    dense: np.ndarray           # (n_vertices,) index into cluster_ids
    sizes: np.ndarray           # per cluster_ids entry
    touches_boundary: np.ndarray  # bool per cluster_ids entry

    @property
    def n_clusters(self) -> int:
        return int(self.cluster_ids.shape[0])

    @cached_property
    def vertex_sizes(self) -> np.ndarray:
        return self.sizes[self.dense]


def components(config: np.ndarray, g: BoxGeometry) -> ClusterDecomposition:
    """Exact union-find partition of a configuration into clusters."""
    config = np.asarray(config, dtype=np.uint8)
    if config.shape != (g.n_edges,):
        raise InvalidParameterError("configuration does not match the geometry")
    roots = backend.component_roots(
        g.n_nodes, g.edges_u, g.edges_v, config, g.fused_u, g.fused_v)
    labels = backend.min_index_labels(roots, g.n_vertices)
    cluster_ids, dense, sizes = np.unique(labels, return_inverse=True, return_counts=True)
    touches = np.zeros(cluster_ids.shape[0], dtype=bool)
    if g.mode != "periodic":
        touches[dense[g.inner_boundary]] = True
        if not g.wired:
            # free conditions: no bond leaves the box, so an isolated rim site
            # is not boundary-connected; a real connection needs an open path
            touches &= sizes >= 2
    return ClusterDecomposition(geometry=g, labels=labels, cluster_ids=cluster_ids,
                                dense=dense, sizes=sizes.astype(np.int64),
                                touches_boundary=touches)


def _winding_clusters(config: np.ndarray, dec: ClusterDecomposition) -> np.ndarray:
    """Bool per cluster: does it wrap the torus in some direction?

    Breadth-first search assigning each vertex a lift of its position;
    reaching a visited vertex with a different lift certifies a wrap.
    """
    g = dec.geometry
    coords = g.coords
    deltas = coords[g.edges_v] - coords[g.edges_u]
    sides = np.asarray(g.shape)
    # wrap bonds have coordinate jump 1-L along their axis; logical step is +1
    logical = np.where(np.abs(deltas) > 1, np.sign(deltas) * (np.abs(deltas) - sides), deltas)
    adj: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(g.n_vertices)]
    for j in np.flatnonzero(config):
        u, v = int(g.edges_u[j]), int(g.edges_v[j])
        adj[u].append((v, logical[j]))
        adj[v].append((u, -logical[j]))
    winds = np.zeros(dec.n_clusters, dtype=bool)
    lift = np.full((g.n_vertices, g.d), 0, dtype=np.int64)
    seen = np.zeros(g.n_vertices, dtype=bool)
    for start in range(g.n_vertices):
        if seen[start]:
            continue
        seen[start] = True
        stack = [start]
        while stack:
            x = stack.pop()
            for y, step in adj[x]:
                cand = lift[x] + step
                if not seen[y]:
                    seen[y] = True
                    lift[y] = cand
                    stack.append(y)
                elif np.any(lift[y] != cand):
                    winds[dec.dense[start]] = True
    return winds


def proxy_mask(dec: ClusterDecomposition, rule: str | None = None) -> np.ndarray:
    """Vertex mask of the infinite-cluster proxy.

    Default rule: boundary-connected clusters for free/wired boxes, the
    (unique) largest cluster on a torus with ties broken towards the
    smallest representative.
    """
    g = dec.geometry
    if rule is None:
        rule = "largest" if g.mode == "periodic" else "boundary"
    if rule not in PROXY_RULES:
        raise InvalidParameterError(f"unknown proxy rule {rule!r}")
    if rule == "winding":
        raise InvalidParameterError("winding rule needs the configuration; use proxy_mask_winding")
    return ~finite_marker(dec, rule)[dec.dense]


def proxy_mask_winding(config: np.ndarray, dec: ClusterDecomposition) -> np.ndarray:
    if dec.geometry.mode != "periodic":
        raise InvalidParameterError("winding proxy only makes sense on a torus")
    return _winding_clusters(config, dec)[dec.dense]


def default_margin(g: BoxGeometry) -> int:
    """Interior margin t/4 (0 on a torus, which is translation invariant)."""
    if g.mode == "periodic":
        return 0
    t = g.t if g.t is not None else (min(g.shape) - 1) // 2
    return max(0, int(np.ceil(t / 4)))


def window_mask(g: BoxGeometry, margin: int | None = None) -> np.ndarray:
    m = default_margin(g) if margin is None else margin
    mask = g.interior_mask(m)
    if not mask.any():
        raise InvalidWindowError(f"margin {m} leaves an empty window in shape {g.shape}")
    return mask


def mean_finite_cluster_size(samples: Iterable[ClusterDecomposition],
                             window: np.ndarray | None = None,
                             rule: str | None = None) -> float:
    """Average over samples and sites of the size of the finite cluster at a site.

    Sites in the proxy contribute 0; isolated sites contribute 1.  This is
    the ergodic-average estimator of the mean finite-cluster size seen
    from a vertex.
    """
    total = 0.0
    count = 0
    for dec in samples:
        w = np.ones(dec.geometry.n_vertices, dtype=bool) if window is None else window
        finite = ~proxy_mask(dec, rule)
        total += float(dec.vertex_sizes[w & finite].sum())
        count += int(w.sum())
    if count == 0:
        raise InsufficientDataError("no samples given")
    return total / count


def partition_window_identity(dec: ClusterDecomposition,
                              window: np.ndarray,
                              rule: str | None = None) -> tuple[int, int]:
    """Both sides of the exact square-sum identity on a window.

    lhs: over finite clusters A, sum of |A ∩ window|^2.
    rhs: over window sites x in finite clusters, sum of |C(x) ∩ window|.
    The two are equal configuration by configuration.
    """
    finite_by_cluster = finite_marker(dec, rule)
    counts = np.bincount(dec.dense[window], minlength=dec.n_clusters).astype(np.int64)
    counts = np.where(finite_by_cluster, counts, 0)
    lhs = int((counts ** 2).sum())
    finite_vertex = finite_by_cluster[dec.dense]
    rhs = int(counts[dec.dense][window & finite_vertex].sum())
    return lhs, rhs


def finite_marker(dec: ClusterDecomposition, rule: str | None = None) -> np.ndarray:
    """Bool per cluster id: not part of the infinite-cluster proxy."""
    g = dec.geometry
    if rule is None:
        rule = "largest" if g.mode == "periodic" else "boundary"
    if rule == "boundary":
        if g.mode == "periodic":
            raise InvalidParameterError("a torus has no boundary; use 'largest' or 'winding'")
        return ~dec.touches_boundary
    if rule == "largest":
        marker = np.ones(dec.n_clusters, dtype=bool)
        marker[int(np.argmax(dec.sizes))] = False  # argmax takes the first = smallest id
        return marker
    raise InvalidParameterError(f"unknown proxy rule {rule!r}")


@dataclass(frozen=True)
class ConnectivityProfile:
    """Translation-averaged proxy two-point estimates on an interior window.

    ``centred[i]`` is the covariance estimate for offsets[i], centred with
    the per-offset marginal means of its own pair ensemble (a global theta
    squared would pick up the residual near-boundary profile of the proxy
    density and bias every far term upward).
    """

    offsets: np.ndarray        # (n_offsets, d) integer offsets, |k|_inf <= cutoff
    values: np.ndarray         # averaged 1{x in proxy, x+k in proxy}
    centred: np.ndarray        # per-offset covariance estimates
    theta: float               # the k = 0 marginal value
    cutoff: int
    window_size: int
    n_samples: int

    def variance_series(self) -> float:
        """Truncated lattice sum of centred two-point terms."""
        return float(self.centred.sum())

    def shell_sums(self) -> np.ndarray:
        """Centred contribution per L-infinity shell 0..cutoff (truncation diagnostic)."""
        radius = np.abs(self.offsets).max(axis=1)
        out = np.zeros(self.cutoff + 1)
        np.add.at(out, radius, self.centred)
        return out

    def two_point(self, offset) -> float:
        k = np.asarray(offset)
        hit = np.flatnonzero((self.offsets == k).all(axis=1))
        if hit.size == 0:
            raise InvalidWindowError(f"offset {offset} beyond cutoff {self.cutoff}")
        return float(self.values[hit[0]])


def connectivity_accumulate(samples: Sequence[ClusterDecomposition],
                            cutoff: int,
                            margin: int | None = None,
                            rule: str | None = None):
    """Raw pair counts behind the two-point profile (mergeable across workers).

    Returns (offsets, counts, window_size, n_samples); counts[i] sums
    1{x in proxy, x+offsets[i] in proxy} over window sites and samples.
    """
    samples = list(samples)
    if not samples:
        raise InsufficientDataError("no samples given")
    g = samples[0].geometry
    m = default_margin(g) if margin is None else margin
    if g.mode != "periodic" and cutoff > m:
        raise InvalidWindowError(
            f"cutoff {cutoff} exceeds the interior margin {m}; offsets would leave the box")
    shape = g.shape
    win_lo = [m] * g.d
    win_hi = [s - m for s in shape]  # exclusive
    if any(hi <= lo for lo, hi in zip(win_lo, win_hi)):
        raise InvalidWindowError("window is empty at this margin")
    offsets = np.array(list(np.ndindex(*([2 * cutoff + 1] * g.d)))) - cutoff
    n_off = offsets.shape[0]
    acc_xy = np.zeros(n_off, dtype=np.int64)
    acc_x = np.zeros(n_off, dtype=np.int64)
    acc_y = np.zeros(n_off, dtype=np.int64)
    wsize = int(np.prod([hi - lo for lo, hi in zip(win_lo, win_hi)]))
    # both pair endpoints stay inside the window: near-boundary bias (strong
    # under wired conditions) would otherwise inflate every centred term
    pair_counts = np.empty(n_off, dtype=np.int64)
    for i, k in enumerate(offsets):
        pair_counts[i] = int(np.prod([max(hi - lo - abs(int(kk)), 0)
                                      for lo, hi, kk in zip(win_lo, win_hi, k)]))
    for dec in samples:
        grid = proxy_mask(dec, rule).reshape(shape)
        if g.mode == "periodic":
            for i, k in enumerate(offsets):
                rolled = np.roll(grid, tuple(-int(v) for v in k), axis=tuple(range(g.d)))
                acc_xy[i] += int((grid & rolled).sum())
                acc_x[i] += int(grid.sum())
                acc_y[i] += int(grid.sum())
        else:
            for i, k in enumerate(offsets):
                a = grid[tuple(slice(lo + max(0, -kk), hi - max(0, kk))
                               for lo, hi, kk in zip(win_lo, win_hi, k))]
                b = grid[tuple(slice(lo + max(0, kk), hi - max(0, -kk))
                               for lo, hi, kk in zip(win_lo, win_hi, k))]
                acc_xy[i] += int((a & b).sum())
                acc_x[i] += int(a.sum())
                acc_y[i] += int(b.sum())
    if g.mode == "periodic":
        wsize = g.n_vertices
        pair_counts[:] = wsize
    return offsets, acc_xy, acc_x, acc_y, pair_counts, wsize, len(samples)


def profile_from_sums(offsets, acc_xy, acc_x, acc_y, pairs, wsize, n,
                      cutoff: int) -> ConnectivityProfile:
    total = n * pairs
    values = acc_xy / total
    centred = values - (acc_x / total) * (acc_y / total)
    center = int(np.flatnonzero((offsets == 0).all(axis=1))[0])
    return ConnectivityProfile(offsets=offsets, values=values, centred=centred,
                               theta=float(acc_x[center] / total[center]),
                               cutoff=cutoff, window_size=wsize, n_samples=n)


def connectivity_profile(samples: Sequence[ClusterDecomposition],
                         cutoff: int,
                         margin: int | None = None,
                         rule: str | None = None) -> ConnectivityProfile:
    """Estimate proxy two-point functions for all offsets with |k|_inf <= cutoff."""
    sums = connectivity_accumulate(samples, cutoff, margin, rule)
    return profile_from_sums(*sums, cutoff=cutoff)


def proxy_density(samples: Iterable[ClusterDecomposition],
                  window: np.ndarray | None = None,
                  rule: str | None = None) -> float:
    """Fraction of (window) sites lying in the infinite-cluster proxy."""
    total = 0
    count = 0
    for dec in samples:
        w = np.ones(dec.geometry.n_vertices, dtype=bool) if window is None else window
        total += int(proxy_mask(dec, rule)[w].sum())
        count += int(w.sum())
    if count == 0:
        raise InsufficientDataError("no samples given")
    return total / count


def _reach_radii(dec: ClusterDecomposition) -> np.ndarray:
    """Per vertex: largest L1 distance to another vertex of its cluster.

    Uses |y-x|_1 = max over sign vectors s of <s, y-x>, so one max per
    cluster and sign vector suffices.
    """
    g = dec.geometry
    coords = g.coords.astype(np.int64)
    best = np.full(g.n_vertices, -np.inf)
    for signs in np.ndindex(*([2] * g.d)):
        s = np.asarray(signs) * 2 - 1
        val = coords @ s
        top = np.full(dec.n_clusters, np.iinfo(np.int64).min, dtype=np.int64)
        np.maximum.at(top, dec.dense, val)
        best = np.maximum(best, top[dec.dense] - val)
    return best.astype(np.int64)


def radial_connection_profile(samples: Sequence[ClusterDecomposition],
                              radii: Sequence[int],
                              margin: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Estimates of P(a site reaches the sphere at L1 distance n+1) for each n.

    "Reaches" means the site's cluster holds a vertex at L1 distance >= n+1,
    the outer boundary of the radius-n ball.  Returns (estimates, per-sample
    standard errors).  The window must keep the whole ball inside the box.
    """
    samples = list(samples)
    if not samples:
        raise InsufficientDataError("no samples given")
    g = samples[0].geometry
    radii = np.asarray(list(radii), dtype=np.int64)
    if radii.size == 0 or np.any(radii < 0):
        raise InvalidParameterError("radii must be non-negative")
    need = int(radii.max()) + 1
    m = default_margin(g) if margin is None else margin
    if g.mode != "periodic":
        half = (min(g.shape) - 1) // 2
        if m < need:
            m = need
        if m > half:
            raise InvalidWindowError(
                f"radius {radii.max()} does not fit inside shape {g.shape} with its margin")
    window = window_mask(g, m)
    wsize = int(window.sum())
    per_sample = np.empty((len(samples), radii.size))
    for si, dec in enumerate(samples):
        reach = _reach_radii(dec)[window]
        per_sample[si] = (reach[:, None] >= (radii + 1)[None, :]).mean(axis=0)
    est = per_sample.mean(axis=0)
    se = per_sample.std(axis=0, ddof=1) / np.sqrt(len(samples)) if len(samples) > 1 \
        else np.full(radii.size, np.nan)
    return est, se


def tail_condition_profile(samples: Sequence[ClusterDecomposition],
                           n_max: int,
                           margin: int | None = None,
                           rule: str | None = None) -> np.ndarray:
    """P(site in a finite cluster of size >= n/4) for n = 1..n_max.

    The summability of this tail over n is the moment-side hypothesis of
    the density limit theorem, probed here as a decaying sequence.
    """
    samples = list(samples)
    if not samples:
        raise InsufficientDataError("no samples given")
    g = samples[0].geometry
    window = window_mask(g, default_margin(g) if margin is None else margin)
    thresholds = np.arange(1, n_max + 1) / 4.0
    acc = np.zeros(n_max)
    for dec in samples:
        finite = ~proxy_mask(dec, rule)
        sizes = dec.vertex_sizes[window & finite].astype(np.float64)
        acc += (sizes[:, None] >= thresholds[None, :]).sum(axis=0) / window.sum()
    return acc / len(samples)


def pair_covariance_profile(samples: Sequence[ClusterDecomposition],
                            n_values: Sequence[int],
                            margin: int | None = None,
                            rule: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Cov(large-cluster events at 0 and at n*e1), with the proxy counting as infinite.

    For each n the event is {|C(x)| >= n/4 or x in proxy}; the covariance is
    estimated from joint translation averages.  Returns (cov, se) with a
    between-sample standard error.
    """
    samples = list(samples)
    if not samples:
        raise InsufficientDataError("no samples given")
    g = samples[0].geometry
    m = default_margin(g) if margin is None else margin
    shape = g.shape
    n_values = np.asarray(list(n_values), dtype=np.int64)
    covs = np.empty((len(samples), n_values.size))
    for si, dec in enumerate(samples):
        prox = proxy_mask(dec, rule)
        size_grid = np.where(prox, np.inf, dec.vertex_sizes.astype(np.float64)).reshape(shape)
        for ni, n in enumerate(n_values):
            if m + n >= shape[0]:
                raise InvalidWindowError(f"pair separation {n} does not fit at margin {m}")
            d = size_grid >= n / 4.0
            a = d[tuple([slice(m, shape[0] - m - n)] +
                        [slice(m, s - m) for s in shape[1:]])]
            b = d[tuple([slice(m + n, shape[0] - m)] +
                        [slice(m, s - m) for s in shape[1:]])]
            covs[si, ni] = (a & b).mean() - a.mean() * b.mean()
    est = covs.mean(axis=0)
    se = covs.std(axis=0, ddof=1) / np.sqrt(len(samples)) if len(samples) > 1 \
        else np.full(n_values.size, np.nan)
    return est, se


def finite_size_histogram(samples: Iterable[ClusterDecomposition],
                          rule: str | None = None) -> np.ndarray:
    """Pooled histogram of finite-cluster sizes; index s = number of clusters of size s."""
    out = np.zeros(1, dtype=np.int64)
    for dec in samples:
        finite = finite_marker(dec, rule)
        sizes = dec.sizes[finite]
        if sizes.size:
            top = int(sizes.max())
            if top >= out.size:
                out = np.concatenate([out, np.zeros(top + 1 - out.size, dtype=np.int64)])
            np.add.at(out, sizes, 1)
    return out
