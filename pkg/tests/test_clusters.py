from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fklab.clusters import (
    components,
    connectivity_profile,
    default_margin,
    finite_size_histogram,
    mean_finite_cluster_size,
    pair_covariance_profile,
    partition_window_identity,
    proxy_mask,
    proxy_mask_winding,
    radial_connection_profile,
    tail_condition_profile,
    window_mask,
)
from fklab.errors import InvalidWindowError
from fklab.fk import new_config
from fklab.lattice import build_box


def bfs_labels(config, g):
    """Reference labeling, independent of the union-find path."""
    adj = [[] for _ in range(g.n_vertices)]
    for j in np.flatnonzero(config):
        u, v = int(g.edges_u[j]), int(g.edges_v[j])
        adj[u].append(v)
        adj[v].append(u)
    if g.wired:
        rim = list(g.inner_boundary)
        for a in rim[1:]:
            adj[rim[0]].append(a)
            adj[a].append(rim[0])
    labels = np.full(g.n_vertices, -1, dtype=np.int64)
    for s in range(g.n_vertices):
        if labels[s] >= 0:
            continue
        queue = deque([s])
        labels[s] = s
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if labels[y] < 0:
                    labels[y] = s
                    queue.append(y)
    return labels


@pytest.mark.parametrize("mode", ["free", "wired", "periodic"])
def test_components_match_bfs(mode):
    g = build_box(2, 2, mode)
    rng = np.random.default_rng(17)
    for _ in range(334):
        cfg = (rng.random(g.n_edges) < rng.random()).astype(np.uint8)
        dec = components(cfg, g)
        assert np.array_equal(dec.labels, bfs_labels(cfg, g))
        assert dec.sizes.sum() == g.n_vertices


def test_components_3d():
    g = build_box(3, 1, "free")
    rng = np.random.default_rng(5)
    for _ in range(100):
        cfg = (rng.random(g.n_edges) < 0.3).astype(np.uint8)
        dec = components(cfg, g)
        assert np.array_equal(dec.labels, bfs_labels(cfg, g))


def test_trivial_decompositions():
    g = build_box(2, 1, "free")
    all_closed = components(new_config(g, 0), g)
    assert all_closed.n_clusters == 9
    all_open = components(new_config(g, 1), g)
    assert all_open.n_clusters == 1
    # one open bond between (0,0)=center 4 and (1,0)=index 7: a 2-cluster plus singletons
    cfg = new_config(g, 0)
    target = {g.vertex_index((0, 0)), g.vertex_index((1, 0))}
    for j in range(g.n_edges):
        if {int(g.edges_u[j]), int(g.edges_v[j])} == target:
            cfg[j] = 1
    dec = components(cfg, g)
    assert dec.n_clusters == 8
    assert sorted(dec.sizes) == [1] * 7 + [2]


class TestProxy:
    def test_all_open_free_box(self):
        g = build_box(2, 2, "free")
        dec = components(new_config(g, 1), g)
        assert proxy_mask(dec).all()

    def test_all_closed(self):
        g = build_box(2, 2, "free")
        dec = components(new_config(g, 0), g)
        assert not proxy_mask(dec).any()

    def test_wired_ghost_cluster(self):
        g = build_box(2, 2, "wired")
        dec = components(new_config(g, 0), g)
        pm = proxy_mask(dec)
        # rim sites are fused to the ghost even with no open bond
        rim = np.abs(g.coords).max(axis=1) == 2
        assert np.array_equal(pm, rim)

    def test_periodic_largest(self):
        g = build_box(2, 2, "periodic")
        dec = components(new_config(g, 0), g)
        pm = proxy_mask(dec)  # ties: smallest representative wins
        assert pm.sum() == 1 and pm[0]

    def test_periodic_winding(self):
        g = build_box(2, 1, "periodic")
        cfg = new_config(g, 0)
        # open a full horizontal ring through row y=0
        for j in range(g.n_edges):
            a, b = g.coords[g.edges_u[j]], g.coords[g.edges_v[j]]
            if a[1] == 0 and b[1] == 0:
                cfg[j] = 1
        dec = components(cfg, g)
        wm = proxy_mask_winding(cfg, dec)
        assert wm.sum() == 3
        # a bent path of the same size does not wind
        cfg2 = new_config(g, 0)
        cfg2[0] = cfg2[1] = 1
        dec2 = components(cfg2, g)
        assert not proxy_mask_winding(cfg2, dec2).any()


class TestFiniteMeanSize:
    def test_p0_is_one(self):
        g = build_box(2, 2, "free")
        dec = components(new_config(g, 0), g)
        assert mean_finite_cluster_size([dec]) == pytest.approx(1.0)

    def test_p1_wired_is_zero(self):
        g = build_box(2, 2, "wired")
        dec = components(new_config(g, 1), g)
        assert mean_finite_cluster_size([dec]) == pytest.approx(0.0)


@settings(max_examples=60, deadline=None, derandomize=True)
@given(st.integers(0, 2 ** 24 - 1), st.sampled_from(["free", "wired", "periodic"]))
def test_square_sum_identity_property(bits, mode):
    """The window square-sum identity holds configuration by configuration."""
    g = build_box(2, 1, mode) if mode != "periodic" else build_box(2, 1, mode)
    rng = np.random.default_rng(bits)
    cfg = (rng.random(g.n_edges) < rng.random()).astype(np.uint8)
    dec = components(cfg, g)
    for margin in (0, 1):
        window = g.interior_mask(margin)
        lhs, rhs = partition_window_identity(dec, window)
        assert lhs == rhs


def test_square_sum_identity_trivial_cases():
    g = build_box(2, 2, "free")
    window = g.interior_mask(1)
    dec = components(new_config(g, 0), g)
    lhs, rhs = partition_window_identity(dec, window)
    assert lhs == rhs == int(window.sum())


def test_histogram_accounts_every_vertex():
    g = build_box(2, 2, "wired")
    rng = np.random.default_rng(23)
    for _ in range(50):
        cfg = (rng.random(g.n_edges) < 0.4).astype(np.uint8)
        dec = components(cfg, g)
        hist = finite_size_histogram([dec])
        finite_total = int(np.dot(np.arange(hist.size), hist))
        assert finite_total + int(proxy_mask(dec).sum()) == g.n_vertices


class TestTwoPoint:
    def test_p1_wired_all_one(self):
        g = build_box(2, 4, "wired")
        dec = components(new_config(g, 1), g)
        prof = connectivity_profile([dec], cutoff=1, margin=1)
        assert np.allclose(prof.values, 1.0)
        assert prof.theta == pytest.approx(1.0)
        assert prof.variance_series() == pytest.approx(0.0, abs=1e-12)

    def test_p0_all_zero(self):
        g = build_box(2, 4, "free")
        dec = components(new_config(g, 0), g)
        prof = connectivity_profile([dec], cutoff=1, margin=1)
        assert np.allclose(prof.values, 0.0)
        assert prof.variance_series() == pytest.approx(0.0, abs=1e-12)

    def test_cutoff_must_fit(self):
        g = build_box(2, 4, "free")
        dec = components(new_config(g, 0), g)
        with pytest.raises(InvalidWindowError):
            connectivity_profile([dec], cutoff=3, margin=2)

    def test_default_margin(self):
        assert default_margin(build_box(2, 8, "free")) == 2
        assert default_margin(build_box(2, 8, "periodic")) == 0


class TestRadialReach:
    def test_p0(self):
        g = build_box(2, 6, "free")
        dec = components(new_config(g, 0), g)
        est, _ = radial_connection_profile([dec], radii=[1, 2, 3])
        assert np.allclose(est, 0.0)

    def test_p1(self):
        g = build_box(2, 6, "free")
        dec = components(new_config(g, 1), g)
        est, _ = radial_connection_profile([dec], radii=[1, 2])
        assert np.allclose(est, 1.0)

    def test_radius_zero_means_any_neighbour(self):
        # reach >= 1 at n=0: the site has at least one open incident bond
        g = build_box(2, 3, "free")
        cfg = new_config(g, 0)
        cfg[0] = 1
        dec = components(cfg, g)
        reach_est, _ = radial_connection_profile([dec], radii=[0], margin=3)
        window = window_mask(g, 3)
        touched = {int(g.edges_u[0]), int(g.edges_v[0])}
        expected = sum(1 for v in np.flatnonzero(window) if v in touched) / window.sum()
        assert reach_est[0] == pytest.approx(expected)

    def test_ball_must_fit(self):
        g = build_box(2, 4, "free")
        dec = components(new_config(g, 0), g)
        with pytest.raises(InvalidWindowError):
            radial_connection_profile([dec], radii=[10])


class TestConditionProfiles:
    def test_tails_vanish_at_p0(self):
        g = build_box(2, 6, "free")
        dec = components(new_config(g, 0), g)
        tails = tail_condition_profile([dec], n_max=12)
        # a singleton has size 1 >= n/4 only while n <= 4
        assert np.all(tails[:4] == 1.0)
        assert np.all(tails[4:] == 0.0)

    def test_tails_non_increasing(self):
        g = build_box(2, 6, "free")
        rng = np.random.default_rng(2)
        decs = [components((rng.random(g.n_edges) < 0.45).astype(np.uint8), g)
                for _ in range(20)]
        tails = tail_condition_profile(decs, n_max=16)
        assert np.all(np.diff(tails) <= 1e-12)

    def test_pair_covariance_shapes(self):
        g = build_box(2, 8, "free")
        rng = np.random.default_rng(3)
        decs = [components((rng.random(g.n_edges) < 0.45).astype(np.uint8), g)
                for _ in range(10)]
        cov, se = pair_covariance_profile(decs, n_values=[1, 2, 4], margin=2)
        assert cov.shape == (3,) and se.shape == (3,)


@pytest.fixture(scope="module")
def supercritical_decs():
    from fklab.fk import FKParams, run_chain

    g = build_box(2, 24, "free")
    return [components(cfg, g)
            for cfg in run_chain(g, FKParams(0.7, 1.0), "sw",
                                 sweeps=2500, burnin=1, thin=1, seed=55)]


class TestSupercriticalConsistency:
    """Independent-bond supercritical run: the classic q = 1 sanity regime."""

    def test_series_matches_direct_window_variance(self, supercritical_decs):
        decs = supercritical_decs
        """Two estimators of the density variance agree within 20%."""
        g = decs[0].geometry
        w = window_mask(g, 6)
        prof = connectivity_profile(decs, cutoff=6, margin=6)
        counts = np.array([proxy_mask(d)[w].sum() for d in decs], dtype=float)
        direct = counts.var(ddof=1) / w.sum()
        assert abs(direct - prof.variance_series()) / direct < 0.20

    def test_far_pairs_uncorrelated(self, supercritical_decs):
        """Large-cluster events at distant sites decouple (within 3 sigma)."""
        cov, se = pair_covariance_profile(supercritical_decs[:1200],
                                          n_values=[30, 34], margin=2)
        assert np.all(np.abs(cov) <= 3 * se)


def test_proxy_density_monotone_in_p():
    """FKG/domination at the estimator level: theta rises along a p-grid."""
    from fklab.fk import FKParams, run_chain

    estimates = []
    for p in (0.55, 0.65, 0.75, 0.85):
        g = build_box(2, 12, "wired")
        w = window_mask(g, 3)
        decs = [components(c, g)
                for c in run_chain(g, FKParams(p, 2.0, "wired"), "sw",
                                   sweeps=150, burnin=130, thin=2, seed=66)]
        th = np.array([proxy_mask(d)[w].mean() for d in decs])
        estimates.append((th.mean(), th.std(ddof=1) / np.sqrt(len(th))))
    for (lo, lo_se), (hi, hi_se) in zip(estimates, estimates[1:]):
        assert lo <= hi + 3 * np.hypot(lo_se, hi_se)
