"""Finite-volume random-cluster sampling.

The target weight on edge configurations w of a box is

    prod_e p^w(e) (1-p)^(1-w(e)) * q^k(w)

with k(w) the number of clusters; under wired boundary conditions every
cluster touching the boundary is merged through the ghost node and
counted once.  Two dynamics are provided: a single-bond heat bath
(every edge rescanned in geometry order against the exact conditional)
and the cluster alternation for integer q (spins given edges, edges
given spins).  Both leave the target invariant for any scan order; the
fixed order is a reproducibility choice.

All randomness is drawn as flat uniform arrays from a per-chain
generator, so a (seed, geometry, params, algorithm, sweep#) tuple fully
determines the state on either kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import (
    InvalidParameterError,
    UnsupportedAlgorithmError,
    UnsupportedRegimeError,
)
from .lattice import BoxGeometry

ALGORITHMS = ("sw", "sweeny")


@dataclass(frozen=True)
class FKParams:
    """Open-bond probability p, cluster weight q and boundary condition."""

    p: float
    q: float
    boundary: str = "free"  # matches the geometry mode ("free"/"periodic" count alike)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must be in [0,1], got {self.p}")
        if self.q <= 0.0:
            raise InvalidParameterError(f"q must be > 0, got {self.q}")
        if self.boundary not in ("free", "wired", "periodic"):
            raise InvalidParameterError(f"unknown boundary {self.boundary!r}")

    @property
    def beta(self) -> float:
        """Inverse temperature with the convention p = 1 - exp(-2*beta)."""
        if self.p >= 1.0:
            return math.inf
        return -0.5 * math.log1p(-self.p)

    @classmethod
    def from_beta(cls, beta: float, q: float, boundary: str = "free") -> "FKParams":
        if beta < 0:
            raise InvalidParameterError("beta must be >= 0")
        return cls(p=-math.expm1(-2.0 * beta), q=q, boundary=boundary)

    @classmethod
    def for_geometry(cls, p: float, q: float, g: BoxGeometry) -> "FKParams":
        return cls(p=p, q=q, boundary=g.mode)


def new_config(g: BoxGeometry, fill: int = 0) -> np.ndarray:
    """Edge configuration: one uint8 per inner bond, geometry edge order."""
    return np.full(g.n_edges, fill, dtype=np.uint8)


def _check_config(config: np.ndarray, g: BoxGeometry) -> np.ndarray:
    config = np.asarray(config, dtype=np.uint8)
    if config.shape != (g.n_edges,):
        raise InvalidParameterError(
            f"configuration has {config.shape} entries, geometry has {g.n_edges} edges")
    return config


def cluster_count(config: np.ndarray, g: BoxGeometry) -> int:
    """Number of clusters under the wired/free counting convention of the weight."""
    config = _check_config(config, g)
    roots = backend.component_roots(
        g.n_nodes, g.edges_u, g.edges_v, config, g.fused_u, g.fused_v)
    return int(np.unique(roots).shape[0])


def fk_weight(config: np.ndarray, g: BoxGeometry, prm: FKParams) -> float:
    """Unnormalised random-cluster weight of one configuration."""
    config = _check_config(config, g)
    m1 = int(config.sum())
    m0 = g.n_edges - m1
    k = cluster_count(config, g)
    return float(prm.p ** m1 * (1.0 - prm.p) ** m0 * prm.q ** k)


def heatbath_open_prob(connected_without_edge: bool, prm: FKParams) -> float:
    """Conditional probability that an edge is open given every other edge.

    Opening the edge changes the cluster count only when its endpoints are
    not already joined elsewhere, which tilts the odds by a factor q.
    """
    if prm.q < 1.0:
        raise UnsupportedRegimeError("single-bond heat bath implemented for q >= 1 only")
    if connected_without_edge:
        return prm.p
    return prm.p / (prm.p + prm.q * (1.0 - prm.p))


@dataclass
class ChainState:
    """Mutable Markov-chain state, confined to one worker at a time."""

    geometry: BoxGeometry
    params: FKParams
    algorithm: str
    config: np.ndarray
    spins: np.ndarray | None
    rng: np.random.Generator
    sweep: int = 0
    _adj: tuple = field(default=None, repr=False)

    def adjacency(self):
        if self._adj is None:
            g = self.geometry
            self._adj = backend.adjacency_csr(
                g.n_nodes, g.edges_u, g.edges_v, g.fused_u, g.fused_v)
        return self._adj


def init_chain(g: BoxGeometry, prm: FKParams, algorithm: str, seed) -> ChainState:
    if algorithm not in ALGORITHMS:
        raise UnsupportedAlgorithmError(f"unknown algorithm {algorithm!r}")
    if algorithm == "sw":
        q_int = round(prm.q)
        if abs(prm.q - q_int) > 1e-12 or q_int < 1:
            raise UnsupportedAlgorithmError(
                "cluster (sw) updates need integer q >= 1; use 'sweeny' for real q")
    else:
        if prm.q < 1.0:
            raise UnsupportedRegimeError("single-bond dynamics target the q >= 1 regime")
    rng = np.random.Generator(np.random.PCG64(seed))
    spins = None
    if algorithm == "sw":
        # constant initial spins; the ghost node (last slot) keeps spin 1 forever
        spins = np.ones(g.n_nodes, dtype=np.int32)
    return ChainState(geometry=g, params=prm, algorithm=algorithm,
                      config=new_config(g), spins=spins, rng=rng)


def sw_sweep(st: ChainState) -> ChainState:
    """Cluster alternation: edges given spins, then fresh spins given edges."""
    g = st.geometry
    p = st.params.p
    q = int(round(st.params.q))
    u_edges = st.rng.random(g.n_edges)
    if q == 1:
        # a single colour makes every bond unconstrained: direct product sampling
        st.config = (u_edges < p).astype(np.uint8)
        st.sweep += 1
        return st
    u_sites = st.rng.random(g.n_vertices)
    agree = st.spins[g.edges_u] == st.spins[g.edges_v]
    st.config = (agree & (u_edges < p)).astype(np.uint8)
    roots = backend.component_roots(
        g.n_nodes, g.edges_u, g.edges_v, st.config, g.fused_u, g.fused_v)
    labels = backend.min_index_labels(roots, g.n_vertices)
    # one uniform per site; a cluster is coloured by its representative's draw
    colors = np.minimum((u_sites * q).astype(np.int64), q - 1).astype(np.int32) + 1
    spins = colors[labels]
    if g.wired:
        ghost_label = labels[g.inner_boundary[0]]
        spins[labels == ghost_label] = 1
        st.spins = np.concatenate([spins, np.ones(1, dtype=np.int32)])
    else:
        st.spins = spins
    st.sweep += 1
    return st


def sweeny_sweep(st: ChainState) -> ChainState:
    """Single-bond heat bath over all edges in geometry order."""
    g = st.geometry
    prm = st.params
    if prm.q < 1.0:
        raise UnsupportedRegimeError("single-bond dynamics target the q >= 1 regime")
    indptr, nbr, nbr_edge = st.adjacency()
    uniforms = st.rng.random(g.n_edges)
    backend.single_bond_sweep(
        g.n_nodes, g.edges_u, g.edges_v, st.config,
        indptr, nbr, nbr_edge, prm.p, prm.q, uniforms)
    st.sweep += 1
    return st


def _do_sweep(st: ChainState) -> ChainState:
    return sw_sweep(st) if st.algorithm == "sw" else sweeny_sweep(st)


def run_chain(g: BoxGeometry, prm: FKParams, algorithm: str,
              sweeps: int, burnin: int = 0, thin: int = 1, seed=0):
    """Yield ``sweeps`` configurations after burn-in, keeping every thin-th sweep.

    Bit-reproducible for fixed inputs: the stream is a pure function of
    (geometry, params, algorithm, sweeps, burnin, thin, seed).
    """
    if sweeps <= 0:
        raise InvalidParameterError("sweeps must be > 0")
    if burnin < 0 or thin < 1:
        raise InvalidParameterError("need burnin >= 0 and thin >= 1")
    st = init_chain(g, prm, algorithm, seed)
    for _ in range(burnin):
        _do_sweep(st)
    for _ in range(sweeps):
        for _ in range(thin):
            _do_sweep(st)
        yield st.config.copy()


def default_burnin(g: BoxGeometry, algorithm: str) -> int:
    """Conservative heuristics: 10 sweeps per side for cluster moves, 100 single-bond scans."""
    if algorithm == "sw":
        return 10 * max(g.shape)
    return 100
