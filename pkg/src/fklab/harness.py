"""Replicated experiments: normalized statistics, calibration, summaries.

A run has two passes with structurally disjoint random streams.  The
calibration pass, at the largest box, estimates the proxy density, the
mean finite-cluster size and the truncated two-point variance series;
the measurement pass then forms centred statistics per replicate using
only calibration estimates (in-sample centering would bias variances).

Replicates are spread over independent chains; results are folded in
(box, chain, replicate) order so the thread count never changes output.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .clusters import (
    ClusterDecomposition,
    components,
    connectivity_accumulate,
    default_margin,
    mean_finite_cluster_size,
    pair_covariance_profile,
    profile_from_sums,
    proxy_mask,
    radial_connection_profile,
    tail_condition_profile,
    window_mask,
)
from .coloring import ColorParams, color_clusters, detect_phase, empirical_vector, predicted_covariance
from .errors import InvalidParameterError, ResourceCapError
from .fk import FKParams, default_burnin, run_chain
from .lattice import build_box
from .normality import NormalityResult, decay_fit, normality_test

STATISTICS = (
    "infinite-density",
    "empirical-vector-fixed-r",
    "empirical-vector-selfnorm",
    "mixture",
    "magnetization-ising",
    "decay",
    "conditions-mc",
)

_CALIB, _MEASURE, _JITTER = 0, 1, 2


@dataclass(frozen=True)
class ExperimentPlan:
    d: int
    t_values: tuple[int, ...]
    mode: str
    p: float
    q: float
    algorithm: str = "sw"
    statistic: str = "infinite-density"
    replicates: int = 200
    seed: int = 0
    burnin: int | None = None
    thin: int = 1
    chains: int = 8
    calibration_replicates: int = 400
    color: ColorParams | None = None
    window_margin: int | None = None
    series_cutoff: int | None = None
    decay_radii: tuple[int, ...] = tuple(range(4, 21))
    profile_n_max: int | None = None
    proxy_rule: str | None = None
    max_vertices: int = 1 << 21
    threads: int = 1

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise InvalidParameterError(f"unknown statistic {self.statistic!r}")
        if self.replicates < 2:
            raise InvalidParameterError("need at least 2 replicates")
        ts = tuple(self.t_values)
        if not ts or any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidParameterError("t_values must be non-empty and strictly increasing")
        if self.statistic in ("empirical-vector-fixed-r", "empirical-vector-selfnorm",
                              "mixture", "magnetization-ising"):
            if self.color is None:
                raise InvalidParameterError(f"statistic {self.statistic} needs colour parameters")
            if self.statistic == "magnetization-ising" and self.color.q_colors != 2:
                raise InvalidParameterError("the magnetization statistic needs exactly 2 colours")
            if self.statistic == "mixture" and self.color.mixture is None:
                raise InvalidParameterError("the mixture statistic needs a mixture law")
        if self.chains < 1 or self.thin < 1 or (self.burnin is not None and self.burnin < 0):
            raise InvalidParameterError("bad sampling controls")

    def needs_coloring(self) -> bool:
        return self.statistic in ("empirical-vector-fixed-r", "empirical-vector-selfnorm",
                                  "mixture", "magnetization-ising")

    def params(self) -> FKParams:
        return FKParams(p=self.p, q=self.q, boundary=self.mode)


def stream_key(plan: ExperimentPlan, purpose: int, t_index: int, chain: int):
    return np.random.SeedSequence(plan.seed, spawn_key=(purpose, t_index, chain))


def experiment_stream_keys(plan: ExperimentPlan) -> list[tuple[int, int, int]]:
    """All (purpose, t_index, chain) triples the run will use; must be unique."""
    keys = [(_CALIB, len(plan.t_values) - 1, c) for c in range(plan.chains)]
    for ti in range(len(plan.t_values)):
        keys += [(_MEASURE, ti, c) for c in range(plan.chains)]
        keys.append((_JITTER, ti, 0))
    return keys


@dataclass(frozen=True)
class Calibration:
    t: int
    window_size: int
    margin: int
    cutoff: int
    theta: float
    theta_se: float
    chi_finite: float
    chi_finite_se: float
    sigma_sq: float
    sigma_sq_last_shell: float
    n_samples: int

    def to_dict(self) -> dict:
        return {k: (v if not isinstance(v, float) or np.isfinite(v) else None)
                for k, v in asdict(self).items()}


@dataclass
class TSummary:
    t: int
    window_size: int
    values: np.ndarray                      # (N,) or (N, k)
    columns: tuple[str, ...]
    extras: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)
    normality: list | None = None
    predicted: dict = field(default_factory=dict)


@dataclass
class ExperimentSummary:
    plan: ExperimentPlan
    calibration: Calibration | None
    per_t: list[TSummary]
    wall_time: float
    version: str = __version__

    def to_dict(self, include_timing: bool = False) -> dict:
        plan = asdict(self.plan)
        plan.pop("threads", None)  # scheduling knob; never affects the numbers
        if plan.get("color"):
            for key in ("nu", "mixture"):
                if plan["color"][key] is not None:
                    plan["color"][key] = list(plan["color"][key])
        plan["t_values"] = list(plan["t_values"])
        plan["decay_radii"] = list(plan["decay_radii"])
        out = {
            "schema_version": 1,
            "version": self.version,
            "plan": plan,
            "calibration": self.calibration.to_dict() if self.calibration else None,
            "per_t": [
                {
                    "t": s.t,
                    "window_size": s.window_size,
                    "columns": list(s.columns),
                    "samples": np.asarray(s.values).tolist(),
                    "extras": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                               for k, v in s.extras.items()},
                    "moments": s.moments,
                    "normality": s.normality,
                    "predicted": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                                  for k, v in s.predicted.items()},
                }
                for s in self.per_t
            ],
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out


# ------------------------------------------------------------- statistics

def density_statistic(proxy_count: float, theta_hat: float, window_size: int) -> float:
    """Centred, square-root-normalised count of proxy sites in the window."""
    if theta_hat is None:
        raise InvalidParameterError("theta_hat missing: run a calibration pass first")
    return (proxy_count - theta_hat * window_size) / np.sqrt(window_size)


def vector_statistic(counts: np.ndarray, theta_hat: float, nu: np.ndarray,
                     center_color: int, window_size: int) -> np.ndarray:
    """Centred colour-count vector; the centering mass ((1-θ)ν + θ e_c) sums to one."""
    center = window_size * ((1.0 - theta_hat) * np.asarray(nu, dtype=float))
    center[center_color - 1] += window_size * theta_hat
    return (np.asarray(counts, dtype=float) - center) / np.sqrt(window_size)


def magnetization_statistic(m: float, theta_hat: float, window_size: int) -> float:
    """sqrt(W) * (m - sign(m) * theta); sign(0) := +1."""
    sign = 1.0 if m >= 0 else -1.0
    return float(np.sqrt(window_size) * (m - sign * theta_hat))


@dataclass(frozen=True)
class CrossCheck:
    empirical: float
    predicted: float
    relative_deviation: float
    mc_relative_se: float
    consistent: bool


def variance_crosscheck(empirical: float, predicted: float, n: int) -> CrossCheck:
    """Relative gap between a sample variance and its predicted value.

    The Monte Carlo error bar uses the normal-sample approximation
    sd(var) ~ var * sqrt(2/(n-1)).
    """
    if predicted <= 0.0:
        if abs(empirical) > 1e-12:
            return CrossCheck(empirical, predicted, np.inf, np.inf, False)
        return CrossCheck(empirical, predicted, 0.0, 0.0, True)
    rel = abs(empirical - predicted) / predicted
    se = empirical * np.sqrt(2.0 / max(n - 1, 1)) / predicted
    return CrossCheck(empirical, predicted, rel, se, True)


# ------------------------------------------------------------- execution

def _box(plan: ExperimentPlan, t: int):
    g = build_box(plan.d, t, plan.mode)
    if g.n_vertices > plan.max_vertices:
        raise ResourceCapError(
            f"box with {g.n_vertices} vertices exceeds the cap {plan.max_vertices}")
    return g


def _margin(plan: ExperimentPlan, g) -> int:
    return default_margin(g) if plan.window_margin is None else plan.window_margin


def _cutoff(plan: ExperimentPlan, t: int) -> int:
    return max(1, t // 8) if plan.series_cutoff is None else plan.series_cutoff


def _chain_sizes(total: int, chains: int) -> list[int]:
    base, rem = divmod(total, chains)
    return [base + (1 if c < rem else 0) for c in range(chains)]


def _collect_chain(plan: ExperimentPlan, g, purpose: int, t_index: int,
                   chain: int, n_keep: int) -> list[ClusterDecomposition]:
    if n_keep == 0:
        return []
    key = stream_key(plan, purpose, t_index, chain)
    fk_seed, _ = key.spawn(2)
    burnin = default_burnin(g, plan.algorithm) if plan.burnin is None else plan.burnin
    return [components(cfg, g) for cfg in
            run_chain(g, plan.params(), plan.algorithm, sweeps=n_keep,
                      burnin=burnin, thin=plan.thin, seed=fk_seed)]


def _measure_chain(plan: ExperimentPlan, g, window, t_index: int,
                   chain: int, n_keep: int) -> list[dict]:
    """Per-replicate raw ingredients for one chain (statistics are formed later)."""
    if n_keep == 0:
        return []
    key = stream_key(plan, _MEASURE, t_index, chain)
    fk_seed, color_seed = key.spawn(2)
    color_rng = np.random.Generator(np.random.PCG64(color_seed))
    burnin = default_burnin(g, plan.algorithm) if plan.burnin is None else plan.burnin
    cp = plan.color
    mixture_cum = None
    if cp is not None and cp.mixture is not None and plan.statistic in ("mixture", "magnetization-ising"):
        mixture_cum = np.cumsum(np.asarray(cp.mixture, dtype=float))
        mixture_cum[-1] = 1.0
    rows: list[dict] = []
    for cfg in run_chain(g, plan.params(), plan.algorithm, sweeps=n_keep,
                         burnin=burnin, thin=plan.thin, seed=fk_seed):
        dec = components(cfg, g)
        row: dict = {"proxy_count": int(proxy_mask(dec, plan.proxy_rule)[window].sum())}
        if plan.needs_coloring():
            if mixture_cum is not None:
                ground = int(np.searchsorted(mixture_cum, color_rng.random(), side="right")) + 1
                ground = min(ground, cp.q_colors)
            else:
                ground = cp.ground_color
            spins = color_clusters(dec, cp, color_rng, ground_color=ground,
                                   rule=plan.proxy_rule)
            ev = empirical_vector(spins, cp.q_colors, window)
            row["counts"] = ev.counts
            row["ground"] = ground
        rows.append(row)
    return rows


def _run_tasks(plan: ExperimentPlan, tasks, fn):
    if plan.threads <= 1:
        return [fn(*args) for args in tasks]
    with ThreadPoolExecutor(max_workers=plan.threads) as pool:
        futures = [pool.submit(fn, *args) for args in tasks]
        return [f.result() for f in futures]


def run_calibration(plan: ExperimentPlan) -> Calibration:
    t = plan.t_values[-1]
    g = _box(plan, t)
    margin = _margin(plan, g)
    cutoff = _cutoff(plan, t)
    window = window_mask(g, margin)
    sizes = _chain_sizes(plan.calibration_replicates, plan.chains)
    t_index = len(plan.t_values) - 1

    def one(chain: int, n_keep: int):
        decs = _collect_chain(plan, g, _CALIB, t_index, chain, n_keep)
        if not decs:
            return None
        theta = float(np.mean([proxy_mask(d, plan.proxy_rule)[window].mean() for d in decs]))
        chi = mean_finite_cluster_size(decs, window, plan.proxy_rule)
        sums = connectivity_accumulate(decs, cutoff, margin, plan.proxy_rule)
        return theta, chi, sums

    results = [r for r in _run_tasks(plan, [(c, n) for c, n in enumerate(sizes)], one)
               if r is not None]
    thetas = np.array([r[0] for r in results])
    chis = np.array([r[1] for r in results])
    offsets, _, _, _, pairs, wsize, _ = results[0][2]
    acc_xy = np.sum([r[2][1] for r in results], axis=0)
    acc_x = np.sum([r[2][2] for r in results], axis=0)
    acc_y = np.sum([r[2][3] for r in results], axis=0)
    n_total = sum(r[2][6] for r in results)
    profile = profile_from_sums(offsets, acc_xy, acc_x, acc_y, pairs, wsize,
                                n_total, cutoff)
    shells = profile.shell_sums()
    n_chains = len(results)
    theta_se = float(thetas.std(ddof=1) / np.sqrt(n_chains)) if n_chains > 1 else float("nan")
    chi_se = float(chis.std(ddof=1) / np.sqrt(n_chains)) if n_chains > 1 else float("nan")
    return Calibration(t=t, window_size=wsize, margin=margin, cutoff=cutoff,
                       theta=profile.theta, theta_se=theta_se,
                       chi_finite=float(chis.mean()), chi_finite_se=chi_se,
                       sigma_sq=profile.variance_series(),
                       sigma_sq_last_shell=float(shells[-1]),
                       n_samples=n_total)


def _moments_block(values: np.ndarray) -> dict:
    v = np.atleast_2d(np.asarray(values, dtype=float).T).T
    n = v.shape[0]
    out = {
        "n": int(n),
        "mean": v.mean(axis=0).tolist(),
        "mean_se": (v.std(axis=0, ddof=1) / np.sqrt(n)).tolist(),
        "variance": v.var(axis=0, ddof=1).tolist(),
        "variance_se": (v.var(axis=0, ddof=1) * np.sqrt(2.0 / (n - 1))).tolist(),
    }
    c = v - v.mean(axis=0)
    m2 = (c ** 2).mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out["skewness"] = ((c ** 3).mean(axis=0) / m2 ** 1.5).tolist()
        out["ex_kurtosis"] = ((c ** 4).mean(axis=0) / m2 ** 2 - 3.0).tolist()
    out["skewness_se"] = [float(np.sqrt(6.0 / n))] * v.shape[1]
    out["ex_kurtosis_se"] = [float(np.sqrt(24.0 / n))] * v.shape[1]
    if v.shape[1] > 1:
        out["covariance"] = np.cov(v.T, ddof=1).tolist()
    return out


def _normality_block(values: np.ndarray, lattice_width: float,
                     jitter_rng: np.random.Generator | None) -> list:
    """Per-component normality results.

    Count-based statistics live on a lattice of known width, whose atoms
    any distance test detects long before the shape converges.  The test
    therefore runs on samples jittered uniformly over one lattice cell
    (seeded, width recorded); the width is well below the statistic's
    scale, so the composite-test calibration is unaffected.  Moments are
    always reported for the raw values.
    """
    v = np.atleast_2d(np.asarray(values, dtype=float).T).T
    out = []
    for j in range(v.shape[1]):
        col = v[:, j]
        if col.shape[0] < 100 or col.std() == 0.0:
            out.append({"skipped": "needs >= 100 non-degenerate samples"})
            continue
        if jitter_rng is not None and lattice_width > 0:
            col = col + (jitter_rng.random(col.shape[0]) - 0.5) * lattice_width
        r: NormalityResult = normality_test(col)
        out.append({"ks_stat": r.ks_stat, "p_value": r.p_value,
                    "skew_z": r.skew_z, "kurt_z": r.kurt_z, "n": r.n,
                    "jitter_width": lattice_width})
    return out


def _summarize_t(plan: ExperimentPlan, t: int, t_index: int, g, window,
                 rows: list[dict], calib: Calibration | None) -> TSummary:
    wsize = int(window.sum())
    stat = plan.statistic
    extras: dict = {}
    predicted: dict = {}
    if stat == "infinite-density":
        values = np.array([density_statistic(r["proxy_count"], calib.theta, wsize)
                           for r in rows])
        columns = ("value",)
        predicted["variance"] = calib.sigma_sq
        cc = variance_crosscheck(float(values.var(ddof=1)), calib.sigma_sq, len(rows))
        predicted["variance_check"] = asdict(cc)
    elif stat in ("empirical-vector-fixed-r", "empirical-vector-selfnorm", "mixture"):
        cp = plan.color
        nu = cp.nu_vector
        counts = np.stack([r["counts"] for r in rows])
        if stat == "empirical-vector-fixed-r":
            centers = np.full(len(rows), cp.ground_color, dtype=int)
        else:
            centers = np.array([detect_phase(c, calib.theta, nu, wsize) for c in counts])
            extras["phase"] = centers
        if stat == "mixture":
            extras["ground"] = np.array([r["ground"] for r in rows])
        values = np.stack([
            vector_statistic(c, calib.theta, nu, int(cc_), wsize)
            for c, cc_ in zip(counts, centers)
        ])
        columns = tuple(f"value_{i+1}" for i in range(cp.q_colors))
        pred = predicted_covariance(cp, calib.chi_finite, calib.sigma_sq)
        predicted["covariance"] = pred
        emp = np.cov(values.T, ddof=1)
        denom = float(np.linalg.norm(pred))
        predicted["frobenius_relative_deviation"] = (
            float(np.linalg.norm(emp - pred)) / denom if denom > 0 else None)
    elif stat == "magnetization-ising":
        counts = np.stack([r["counts"] for r in rows])
        m = (counts[:, 0] - counts[:, 1]) / wsize
        signed = np.array([magnetization_statistic(v, calib.theta, wsize) for v in m])
        naive = np.sqrt(wsize) * (m - calib.theta)
        values = np.stack([signed, naive], axis=1)
        columns = ("value", "value_naive")
        extras["ground"] = np.array([r.get("ground", plan.color.ground_color) for r in rows])
        predicted["variance"] = calib.chi_finite + calib.sigma_sq
        cc = variance_crosscheck(float(signed.var(ddof=1)),
                                 calib.chi_finite + calib.sigma_sq, len(rows))
        predicted["variance_check"] = asdict(cc)
    else:  # pragma: no cover - run_experiment dispatches profiles elsewhere
        raise InvalidParameterError(f"statistic {stat} has no per-replicate form")
    moments = _moments_block(values)
    # counts step by 1, the two-colour magnetization by 2, before the sqrt(W) scaling
    lattice_width = (2.0 if stat == "magnetization-ising" else 1.0) / np.sqrt(wsize)
    jitter_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(plan.seed, spawn_key=(_JITTER, t_index, 0))))
    normality = _normality_block(values if values.ndim > 1 else values[:, None],
                                 lattice_width, jitter_rng)
    return TSummary(t=t, window_size=wsize, values=values, columns=columns,
                    extras=extras, moments=moments, normality=normality,
                    predicted=predicted)


def _profile_summary(plan: ExperimentPlan, t: int, g, window) -> TSummary:
    """Decay / summability diagnostics: per-distance estimates instead of replicates."""
    margin = _margin(plan, g)
    sizes = _chain_sizes(plan.replicates, plan.chains)
    t_index = plan.t_values.index(t)
    batches = _run_tasks(plan, [(c, n) for c, n in enumerate(sizes)],
                         lambda c, n: _collect_chain(plan, g, _MEASURE, t_index, c, n))
    decs = [d for batch in batches for d in batch]
    extras: dict = {}
    predicted: dict = {}
    if plan.statistic == "decay":
        radii = np.asarray(plan.decay_radii, dtype=np.int64)
        est, se = radial_connection_profile(decs, radii, margin=None)
        extras = {"radii": radii, "estimate": est, "se": se}
        try:
            fit = decay_fit(radii, est)
            predicted["fit"] = {"rate": fit.rate, "r_squared": fit.r_squared,
                                "intercept": fit.intercept, "used_n": list(fit.used_n)}
        except Exception as exc:  # noqa: BLE001 - fit failure is a reportable outcome
            predicted["fit"] = {"error": str(exc)}
        values = est
        columns = ("estimate",)
    else:  # conditions-mc
        side = g.shape[0]
        n_max = plan.profile_n_max or max(1, min(2 * t, side - 2 * margin - 1))
        tails = tail_condition_profile(decs, n_max, margin, plan.proxy_rule)
        covs, cov_se = pair_covariance_profile(decs, range(1, n_max + 1), margin,
                                               plan.proxy_rule)
        extras = {"n": np.arange(1, n_max + 1), "tail": tails,
                  "pair_cov": covs, "pair_cov_se": cov_se}
        values = np.stack([tails, covs], axis=1)
        columns = ("tail", "pair_cov")
    return TSummary(t=t, window_size=int(window.sum()), values=values,
                    columns=columns, extras=extras, moments={}, normality=None,
                    predicted=predicted)


def run_experiment(plan: ExperimentPlan) -> ExperimentSummary:
    """Calibrate, measure, summarise; reproducible from the plan alone."""
    start = time.perf_counter()
    profile_only = plan.statistic in ("decay", "conditions-mc")
    calib = None if profile_only else run_calibration(plan)
    per_t: list[TSummary] = []
    for t_index, t in enumerate(plan.t_values):
        g = _box(plan, t)
        window = window_mask(g, _margin(plan, g))
        if profile_only:
            per_t.append(_profile_summary(plan, t, g, window))
            continue
        sizes = _chain_sizes(plan.replicates, plan.chains)
        batches = _run_tasks(
            plan, [(c, n) for c, n in enumerate(sizes)],
            lambda c, n: _measure_chain(plan, g, window, t_index, c, n))
        rows = [r for batch in batches for r in batch]
        per_t.append(_summarize_t(plan, t, t_index, g, window, rows, calib))
    return ExperimentSummary(plan=plan, calibration=calib, per_t=per_t,
                             wall_time=time.perf_counter() - start)
