"""Cluster coloring and the direct spin sampler.

Finite clusters are coloured independently from a distribution nu over
{1..q}; every proxy cluster receives the ground colour r.  With uniform
nu on a wired box this realises the q-state spin model at inverse
temperature beta = -log(1-p)/2, which a single-site heat bath samples
directly for cross-validation.

Colour-to-spin convention for q = 2: colour 1 -> +1, colour 2 -> -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import backend
from .clusters import ClusterDecomposition, finite_marker
from .errors import InvalidParameterError
from .lattice import BoxGeometry


@dataclass(frozen=True)
class ColorParams:
    """Number of colours, cluster colour law nu, ground colour, optional mixture."""

    q_colors: int
    nu: tuple[float, ...] | None = None       # None = uniform
    ground_color: int = 1
    mixture: tuple[float, ...] | None = None  # law of the ground colour, one draw per replicate

    def __post_init__(self):
        if self.q_colors < 2:
            raise InvalidParameterError("need at least two colours")
        if not 1 <= self.ground_color <= self.q_colors:
            raise InvalidParameterError("ground colour out of range")
        for name, vec in (("nu", self.nu), ("mixture", self.mixture)):
            if vec is None:
                continue
            v = np.asarray(vec, dtype=float)
            if v.shape != (self.q_colors,) or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
                raise InvalidParameterError(f"{name} must be a length-{self.q_colors} probability vector")

    @property
    def nu_vector(self) -> np.ndarray:
        if self.nu is None:
            return np.full(self.q_colors, 1.0 / self.q_colors)
        return np.asarray(self.nu, dtype=float)


def color_clusters(dec: ClusterDecomposition, cp: ColorParams,
                   rng: np.random.Generator,
                   ground_color: int | None = None,
                   rule: str | None = None) -> np.ndarray:
    """One colour per vertex; clusters are mono-colour by construction.

    Draws one uniform per vertex regardless of the cluster structure (a
    cluster uses its representative's draw), so the stream consumption is
    reproducible.
    """
    g = dec.geometry
    r = cp.ground_color if ground_color is None else ground_color
    if not 1 <= r <= cp.q_colors:
        raise InvalidParameterError("ground colour out of range")
    u = rng.random(g.n_vertices)
    cum = np.cumsum(cp.nu_vector)
    cum[-1] = 1.0
    colors = np.searchsorted(cum, u[dec.labels], side="right").astype(np.int32) + 1
    np.clip(colors, 1, cp.q_colors, out=colors)
    proxy_vertex = ~finite_marker(dec, rule)[dec.dense]
    colors[proxy_vertex] = r
    return colors


def color_clusters_marks(dec: ClusterDecomposition, cp: ColorParams,
                         rng: np.random.Generator,
                         ground_color: int | None = None,
                         rule: str | None = None) -> np.ndarray:
    """Factor-map variant: a cluster takes the colour of its highest-mark vertex.

    Same per-cluster colour law as color_clusters (the argmax position is
    independent of the colour draws); kept as an independent construction
    for consistency tests.
    """
    g = dec.geometry
    r = cp.ground_color if ground_color is None else ground_color
    marks = rng.random(g.n_vertices)
    cum = np.cumsum(cp.nu_vector)
    cum[-1] = 1.0
    draws = np.searchsorted(cum, rng.random(g.n_vertices), side="right").astype(np.int32) + 1
    np.clip(draws, 1, cp.q_colors, out=draws)
    best = np.full(dec.n_clusters, -1.0)
    np.maximum.at(best, dec.dense, marks)
    carrier = np.zeros(dec.n_clusters, dtype=np.int64)
    is_best = marks >= best[dec.dense]          # unique with probability one
    carrier[dec.dense[is_best]] = np.flatnonzero(is_best)
    colors = draws[carrier[dec.dense]]
    proxy_vertex = ~finite_marker(dec, rule)[dec.dense]
    colors[proxy_vertex] = r
    return colors


@dataclass(frozen=True)
class EmpiricalVector:
    """Per-colour counts over a window; counts always sum to the window size."""

    counts: np.ndarray
    window_size: int
    q_colors: int
    phase: int | None = None   # filled by detect_phase when requested

    @property
    def magnetization(self) -> float:
        """(n_1 - n_2)/|window| under the +1/-1 convention (q = 2 only)."""
        if self.q_colors != 2:
            raise InvalidParameterError("magnetization is defined for two colours")
        return float(self.counts[0] - self.counts[1]) / self.window_size


def empirical_vector(spins: np.ndarray, q_colors: int,
                     window: np.ndarray | None = None) -> EmpiricalVector:
    s = spins if window is None else spins[window]
    counts = np.bincount(s, minlength=q_colors + 1)[1:q_colors + 1]
    return EmpiricalVector(counts=counts.astype(np.int64),
                           window_size=int(s.shape[0]), q_colors=q_colors)


def detect_phase(ev: EmpiricalVector | np.ndarray, theta: float,
                 nu: np.ndarray, window_size: int | None = None) -> int:
    """Colour maximising counts minus the finite-cluster background (ties: smallest)."""
    if isinstance(ev, EmpiricalVector):
        counts, wsize = ev.counts, ev.window_size
    else:
        counts, wsize = np.asarray(ev), window_size
        if wsize is None:
            raise InvalidParameterError("window_size required with raw counts")
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError("theta must be in [0,1]")
    score = counts - wsize * (1.0 - theta) * np.asarray(nu, dtype=float)
    return int(np.argmax(score)) + 1


def predicted_covariance(cp: ColorParams, chi_finite: float, sigma_sq: float) -> np.ndarray:
    """Limit covariance of the normalised colour counts.

    chi_finite scales the multinomial part diag(nu) - nu nu^T; sigma_sq
    scales the rank-one part along e_r - nu contributed by the proxy
    fluctuations.  Rows sum to zero: counts are constrained to the window
    size.
    """
    if chi_finite < 0 or sigma_sq < 0:
        raise InvalidParameterError("variance inputs must be >= 0")
    nu = cp.nu_vector
    e_r = np.zeros(cp.q_colors)
    e_r[cp.ground_color - 1] = 1.0
    c = chi_finite * (np.diag(nu) - np.outer(nu, nu))
    c += sigma_sq * np.outer(e_r - nu, e_r - nu)
    return c


def potts_heatbath(g: BoxGeometry, q_colors: int, beta: float, sweeps: int,
                   rng: np.random.Generator,
                   init: np.ndarray | None = None,
                   boundary_color: int | None = None) -> np.ndarray:
    """Single-site heat bath for the q-colour spin model on the box.

    A sweep updates the two parity classes in turn (sites within a class
    are conditionally independent, so the class updates vectorise).  With
    boundary_color set, missing neighbours outside the box count as that
    fixed colour (wired emulation); otherwise boundaries are free.
    """
    if q_colors < 2 or beta < 0:
        raise InvalidParameterError("need q_colors >= 2 and beta >= 0")
    n = g.n_vertices
    if init is None:
        spins = rng.integers(1, q_colors + 1, size=n).astype(np.int32)
    else:
        spins = np.asarray(init, dtype=np.int32).copy()
        if spins.shape != (n,):
            raise InvalidParameterError("init does not match the geometry")
    indptr, nbr, _ = backend.adjacency_csr(
        n, g.edges_u, g.edges_v,
        np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32))
    degree = np.diff(indptr)
    missing = 2 * g.d - degree if boundary_color is not None else np.zeros(n, dtype=np.int64)
    parity = (g.coords.sum(axis=1) % 2).astype(np.int64)
    classes = [np.flatnonzero(parity == 0), np.flatnonzero(parity == 1)]
    # padded neighbour table for vectorised counting; slot -1 = no neighbour
    max_deg = int(degree.max()) if n else 0
    table = np.full((n, max_deg), -1, dtype=np.int64)
    for x in range(n):
        row = nbr[indptr[x]:indptr[x + 1]]
        table[x, :row.shape[0]] = row
    for _ in range(sweeps):
        for cls in classes:
            if cls.size == 0:
                continue
            nbrs = table[cls]                      # (n_cls, max_deg)
            valid = nbrs >= 0
            nspins = np.where(valid, spins[np.maximum(nbrs, 0)], 0)
            weights = np.empty((cls.size, q_colors))
            for c in range(1, q_colors + 1):
                same = ((nspins == c) & valid).sum(axis=1)
                if boundary_color is not None and c == boundary_color:
                    same = same + missing[cls]
                weights[:, c - 1] = np.exp(2.0 * beta * same)
            cum = np.cumsum(weights, axis=1)
            u = rng.random(cls.size) * cum[:, -1]
            choice = (u[:, None] >= cum).sum(axis=1) + 1
            spins[cls] = choice.astype(np.int32)
    return spins


def agreement_probability(spins_samples: Sequence[np.ndarray], x: int, y: int) -> float:
    hits = sum(1 for s in spins_samples if s[x] == s[y])
    return hits / len(spins_samples)


def ising_spontaneous_magnetization(p: float) -> float:
    """Exact square-lattice spontaneous magnetization in the ordered phase.

    Written in terms of the bond density p = 1 - exp(-2 beta):
    (1 - (sinh 2 beta)^-4)^(1/8) = (1 - 16 (1-p)^4 / (p^4 (2-p)^4))^(1/8).
    Equals the ordered-phase density of the wired q = 2 random-cluster
    model; returns 0 below the self-dual point.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("p must be in (0,1)")
    inner = 1.0 - 16.0 * (1.0 - p) ** 4 / (p ** 4 * (2.0 - p) ** 4)
    if inner <= 0.0:
        return 0.0
    return inner ** 0.125
