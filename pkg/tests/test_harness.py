import numpy as np
import pytest
from scipy.stats import ks_2samp

from fklab.coloring import ColorParams
from fklab.errors import InvalidParameterError, ResourceCapError
from fklab.harness import (
    ExperimentPlan,
    density_statistic,
    experiment_stream_keys,
    magnetization_statistic,
    run_experiment,
    variance_crosscheck,
    vector_statistic,
)


def small_plan(**kw):
    base = dict(d=2, t_values=(6,), mode="wired", p=0.8, q=2.0,
                statistic="infinite-density", replicates=40, seed=1,
                calibration_replicates=40, thin=1, chains=4)
    base.update(kw)
    return ExperimentPlan(**base)


class TestStatistics:
    def test_density_centred_zero(self):
        assert density_statistic(0.7 * 100, 0.7, 100) == pytest.approx(0.0)

    def test_density_needs_theta(self):
        with pytest.raises(InvalidParameterError):
            density_statistic(50, None, 100)

    def test_vector_zero_at_centering(self):
        nu = np.array([0.25, 0.75])
        theta = 0.4
        w = 64
        counts = w * ((1 - theta) * nu + theta * np.eye(2)[0])
        q = vector_statistic(counts, theta, nu, 1, w)
        assert np.allclose(q, 0.0)

    def test_vector_sum_degeneracy(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            counts = rng.multinomial(81, [0.3, 0.3, 0.4])
            q = vector_statistic(counts, 0.37, np.array([0.3, 0.3, 0.4]), 2, 81)
            assert abs(q.sum()) < 1e-10

    def test_magnetization_signs(self):
        assert magnetization_statistic(0.9, 0.9, 100) == pytest.approx(0.0)
        assert magnetization_statistic(-0.9, 0.9, 100) == pytest.approx(0.0)
        # sign(0) := +1
        assert magnetization_statistic(0.0, 0.9, 100) == pytest.approx(-9.0)

    def test_variance_crosscheck(self):
        cc = variance_crosscheck(1.2, 1.0, 500)
        assert cc.relative_deviation == pytest.approx(0.2)
        assert cc.consistent
        bad = variance_crosscheck(0.5, 0.0, 500)
        assert not bad.consistent


class TestPlanValidation:
    def test_t_values_increasing(self):
        with pytest.raises(InvalidParameterError):
            small_plan(t_values=(8, 8))

    def test_replicates_minimum(self):
        with pytest.raises(InvalidParameterError):
            small_plan(replicates=1)

    def test_color_required(self):
        with pytest.raises(InvalidParameterError):
            small_plan(statistic="mixture")

    def test_magnetization_needs_two_colors(self):
        with pytest.raises(InvalidParameterError):
            small_plan(statistic="magnetization-ising",
                       color=ColorParams(q_colors=3))

    def test_resource_cap(self):
        with pytest.raises(ResourceCapError):
            run_experiment(small_plan(t_values=(50,), max_vertices=100))


class TestStreams:
    def test_keys_unique(self):
        plan = small_plan(t_values=(4, 6))
        keys = experiment_stream_keys(plan)
        assert len(keys) == len(set(keys))

    def test_calibration_measurement_disjoint(self):
        plan = small_plan()
        keys = experiment_stream_keys(plan)
        purposes = {k[0] for k in keys}
        assert {0, 1} <= purposes


class TestRunExperiment:
    def test_reproducible(self):
        a = run_experiment(small_plan())
        b = run_experiment(small_plan())
        assert np.array_equal(a.per_t[0].values, b.per_t[0].values)
        assert a.calibration.theta == b.calibration.theta
        assert a.to_dict() == b.to_dict()

    def test_seed_changes_samples(self):
        a = run_experiment(small_plan())
        b = run_experiment(small_plan(seed=2))
        assert not np.array_equal(a.per_t[0].values, b.per_t[0].values)

    def test_thread_count_irrelevant(self):
        a = run_experiment(small_plan(threads=1))
        b = run_experiment(small_plan(threads=8))
        assert a.to_dict() == b.to_dict()

    def test_smoke_n2(self):
        s = run_experiment(small_plan(replicates=2, calibration_replicates=10))
        assert len(s.per_t[0].values) == 2
        assert s.per_t[0].normality[0].get("skipped")

    def test_centering_consistency(self):
        """Replicate mean of the centred statistic sits at zero within errors."""
        plan = small_plan(t_values=(8,), replicates=400,
                          calibration_replicates=400, thin=2)
        s = run_experiment(plan)
        st = s.per_t[0]
        mean = st.moments["mean"][0]
        se = np.sqrt(st.moments["mean_se"][0] ** 2
                     + st.window_size * s.calibration.theta_se ** 2)
        assert abs(mean) < 3 * se

    def test_selfnorm_matches_fixed_when_phase_agrees(self):
        cp = ColorParams(q_colors=2, ground_color=1)
        fixed = run_experiment(small_plan(
            statistic="empirical-vector-fixed-r", color=cp, replicates=120))
        selfn = run_experiment(small_plan(
            statistic="empirical-vector-selfnorm", color=cp, replicates=120))
        phases = selfn.per_t[0].extras["phase"]
        vf = np.asarray(fixed.per_t[0].values)
        vs = np.asarray(selfn.per_t[0].values)
        agree = phases == 1
        assert agree.mean() > 0.9  # deep in the ground phase
        assert np.allclose(vf[agree], vs[agree])

    def test_mixture_swap_symmetry(self):
        """gamma vs 1-gamma with swapped colours leaves the statistic's law alone.

        Lattice-width jitter keeps the two-sample comparison from keying on
        the integer atoms of the counts (whose exact positions shift with
        each run's independently calibrated centering).
        """
        def run(mix, seed):
            plan = small_plan(t_values=(12,), p=0.65, statistic="mixture",
                              replicates=600, seed=seed, thin=2,
                              calibration_replicates=300,
                              color=ColorParams(q_colors=2, mixture=mix))
            s = run_experiment(plan)
            w = s.per_t[0].window_size
            vals = np.asarray(s.per_t[0].values)
            jit = np.random.default_rng(seed + 5000)
            return vals + (jit.random(vals.shape) - 0.5) / np.sqrt(w)

        a = run((0.3, 0.7), seed=21)[:, 0]
        # swapping the mixture and reading the second component is the same law
        b = run((0.7, 0.3), seed=22)[:, 1]
        assert ks_2samp(a, b).pvalue >= 0.01

    def test_decay_statistic_shape(self):
        plan = small_plan(t_values=(8,), statistic="decay", replicates=60,
                          decay_radii=tuple(range(1, 5)), p=0.4, q=1.0, mode="free")
        s = run_experiment(plan)
        st = s.per_t[0]
        assert list(st.extras["radii"]) == [1, 2, 3, 4]
        assert st.extras["estimate"].shape == (4,)

    def test_conditions_statistic_shape(self):
        plan = small_plan(t_values=(8,), statistic="conditions-mc",
                          replicates=40, p=0.7, q=1.0, mode="free",
                          profile_n_max=6)
        s = run_experiment(plan)
        st = s.per_t[0]
        assert st.extras["tail"].shape == (6,)
        assert st.extras["pair_cov"].shape == (6,)
        # tail sequence never increases (same samples, rising threshold)
        assert np.all(np.diff(st.extras["tail"]) <= 1e-12)
