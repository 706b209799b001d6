"""Configuration-driven command line front end.

Commands: sample, exact, clt, color, decay.  Every command takes
--config (JSON, validated against the shipped schema; unknown keys are
rejected) and --out.  Exit codes: 0 success, 2 configuration error,
3 resource cap exceeded.  Data files are byte-reproducible from
(config hash, master seed, tool version); timing goes to the
run_info.json sidecar.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .clusters import (
    components,
    connectivity_profile,
    finite_size_histogram,
    mean_finite_cluster_size,
    proxy_mask,
    window_mask,
)
from .coloring import ColorParams
from .errors import FKLabError, InvalidParameterError, ResourceCapError
from .fk import FKParams, default_burnin, run_chain
from .harness import ExperimentPlan, run_experiment
from .io_formats import (
    provenance,
    sanitize,
    svg_histogram,
    write_config_dump,
    write_csv,
    write_json,
    write_spin_dump,
)
from .lattice import build_box
from . import oracle

EXIT_OK, EXIT_CONFIG, EXIT_CAP = 0, 2, 3


def load_schema() -> dict:
    with resources.files("fklab.schemas").joinpath("run_config.schema.json").open() as fh:
        return json.load(fh)


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidParameterError(f"config field {path}: {exc.message}") from exc


def _geometry_ts(config: dict) -> tuple[int, ...]:
    geo = config["geometry"]
    if "t_values" in geo and "t" in geo:
        raise InvalidParameterError("config field geometry: give either t or t_values")
    if "t_values" in geo:
        return tuple(geo["t_values"])
    if "t" in geo:
        return (geo["t"],)
    raise InvalidParameterError("config field geometry: t or t_values required")


def _color_params(config: dict) -> ColorParams | None:
    c = config.get("coloring")
    if c is None:
        return None
    return ColorParams(
        q_colors=c["colors"],
        nu=tuple(c["nu"]) if c.get("nu") is not None else None,
        ground_color=c.get("ground_color", 1),
        mixture=tuple(c["mixture"]) if c.get("mixture") is not None else None,
    )


def build_plan(config: dict, threads: int | None = None) -> ExperimentPlan:
    sampling = config.get("sampling", {})
    analysis = config.get("analysis", {})
    radii = tuple(range(analysis.get("decay_n_min", 4), analysis.get("decay_n_max", 20) + 1))
    return ExperimentPlan(
        d=config["geometry"]["d"],
        t_values=_geometry_ts(config),
        mode=config["geometry"]["mode"],
        p=config["fk"]["p"],
        q=config["fk"]["q"],
        algorithm=config.get("algorithm", "sw"),
        statistic=config.get("statistic", "infinite-density"),
        replicates=sampling.get("replicates", 200),
        seed=config["seed"],
        burnin=sampling.get("burnin"),
        thin=sampling.get("thin", 1),
        chains=sampling.get("chains", 8),
        calibration_replicates=sampling.get("calibration_replicates", 400),
        color=_color_params(config),
        window_margin=analysis.get("window_margin"),
        series_cutoff=analysis.get("series_cutoff"),
        decay_radii=radii,
        profile_n_max=analysis.get("profile_n_max"),
        proxy_rule=analysis.get("proxy_rule"),
        max_vertices=config.get("max_vertices", 1 << 21),
        threads=threads if threads is not None else config.get("threads", 1),
    )


def _out_flags(config: dict) -> dict:
    out = dict(csv=True, json=True, svg=True, dump_configs=False, dump_spins=False)
    out.update(config.get("output", {}))
    return out


# ----------------------------------------------------------------- commands

def cmd_sample(config: dict, outdir: Path, threads: int | None) -> None:
    plan = build_plan(config, threads)
    t = plan.t_values[-1]
    g = build_box(plan.d, t, plan.mode)
    if g.n_vertices > plan.max_vertices:
        raise ResourceCapError(f"{g.n_vertices} vertices exceed cap {plan.max_vertices}")
    prm = FKParams(plan.p, plan.q, plan.mode)
    burnin = default_burnin(g, plan.algorithm) if plan.burnin is None else plan.burnin
    configs = list(run_chain(g, prm, plan.algorithm, sweeps=plan.replicates,
                             burnin=burnin, thin=plan.thin, seed=plan.seed))
    decs = [components(c, g) for c in configs]
    window = window_mask(g, plan.window_margin if plan.window_margin is not None else None)
    prov = provenance(config)
    flags = _out_flags(config)
    rows = []
    for i, (cfg, dec) in enumerate(zip(configs, decs)):
        pm = proxy_mask(dec, plan.proxy_rule)
        rows.append((i, t, int(cfg.sum()), dec.n_clusters, int(pm.sum()),
                     float(pm.mean()), int(dec.sizes.max())))
    if flags["csv"]:
        write_csv(outdir / "per_config.csv",
                  ("replicate", "t", "n_open", "n_clusters", "proxy_count",
                   "proxy_fraction", "largest_cluster"),
                  rows, prov)
    hist = finite_size_histogram(decs, plan.proxy_rule)
    cutoff = plan.series_cutoff if plan.series_cutoff is not None else max(1, t // 8)
    profile = connectivity_profile(decs, cutoff, plan.window_margin, plan.proxy_rule)
    report = {
        "provenance": prov,
        "theta_hat": float(np.mean([proxy_mask(d, plan.proxy_rule)[window].mean()
                                    for d in decs])),
        "chi_finite_hat": mean_finite_cluster_size(decs, window, plan.proxy_rule),
        "size_histogram": hist.tolist(),
        "two_point": [{"offset": off.tolist(), "value": float(v)}
                      for off, v in zip(profile.offsets, profile.values)],
        "variance_series": profile.variance_series(),
    }
    if flags["json"]:
        write_json(outdir / "cluster_report.json", sanitize(report))
    if flags["dump_configs"]:
        header = {"d": plan.d, "t": t, "mode": plan.mode, "p": plan.p, "q": plan.q,
                  "boundary": plan.mode, "algorithm": plan.algorithm,
                  "seed": plan.seed, "n_edges": g.n_edges,
                  "n_records": len(configs), **prov}
        write_config_dump(outdir / "configs.dump", header, configs)


def cmd_exact(config: dict, outdir: Path, threads: int | None) -> None:
    plan = build_plan(config, threads)
    exact_cfg = config.get("exact", {})
    if exact_cfg.get("duality", False) and plan.d != 2:
        raise InvalidParameterError("config field exact.duality: needs d = 2")
    t = plan.t_values[-1]
    g = build_box(plan.d, t, plan.mode)
    dist = oracle.enumerate_distribution(g, plan.p, plan.q)
    prov = provenance(config)
    report: dict = {
        "provenance": prov,
        "n_edges": dist.n_edges,
        "log_z": dist.log_z,
        "normalization_error": abs(float(dist.probs.sum()) - 1.0),
        "edge_marginals": dist.edge_marginals.tolist(),
    }
    events = [oracle.edge_open_event(dist, j) for j in range(dist.n_edges)]
    if exact_cfg.get("connection_events", True) and g.n_vertices >= 2:
        center = g.vertex_index([0] * plan.d) if g.t is not None else 0
        events.append(oracle.connection_event(dist, center, 0))
    if exact_cfg.get("fkg", True):
        report["fkg_worst_covariance"] = oracle.fkg_check(dist, events)
    if exact_cfg.get("duality", False):
        rows = exact_cfg.get("dual_rows", 2 * t + 1)
        cols = exact_cfg.get("dual_cols", 2 * t + 1)
        report["duality_max_discrepancy"] = oracle.duality_check(rows, cols, plan.p, plan.q)
        report["dual_p"] = oracle.dual_p(plan.p, plan.q)
        report["self_dual_point"] = oracle.self_dual_point(plan.q)
    vertex = exact_cfg.get("vertex")
    if vertex is None:
        vertex = g.vertex_index([0] * plan.d) if g.t is not None else 0
    law = oracle.cluster_size_law(dist, vertex)
    report["cluster_size_law"] = {
        "vertex": vertex,
        "sizes": law.sizes.tolist(),
        "finite_sizes": law.finite_sizes.tolist(),
        "theta": law.theta,
        "chi_finite": law.chi_finite,
    }
    write_json(outdir / "exact_report.json", sanitize(report))
    if exact_cfg.get("export_distribution", False):
        # regression-fixture export: one (configuration mask, probability) per row
        rows = [(mask, float(dist.probs[mask])) for mask in range(1 << dist.n_edges)]
        write_csv(outdir / "distribution.csv", ("mask", "probability"), rows, prov)


def _write_summary_files(config: dict, outdir: Path, summary, flags: dict) -> None:
    prov = provenance(config)
    payload = {"provenance": prov, **sanitize(summary.to_dict())}
    if flags["json"]:
        write_json(outdir / "summary.json", payload)
    if flags["csv"]:
        rows = []
        extra_cols: list[str] = []
        for s in summary.per_t:
            for name in ("phase", "ground"):
                if name in s.extras and name not in extra_cols:
                    extra_cols.append(name)
        for s in summary.per_t:
            vals = np.atleast_2d(np.asarray(s.values, dtype=float).T).T
            for i in range(vals.shape[0]):
                row = [i, s.t] + [v for v in vals[i]]
                for name in extra_cols:
                    row.append(s.extras[name][i] if name in s.extras else "")
                rows.append(row)
        columns = ["replicate", "t"] + list(summary.per_t[0].columns) + extra_cols
        write_csv(outdir / "samples.csv", columns, rows, prov)
    if flags["svg"]:
        for s in summary.per_t:
            vals = np.atleast_2d(np.asarray(s.values, dtype=float).T).T
            for j, col in enumerate(s.columns):
                svg = svg_histogram(
                    vals[:, j],
                    f"{summary.plan.statistic} t={s.t} {col}",
                    {"config": prov["config_hash"], "seed": prov["master_seed"],
                     "version": prov["tool_version"], "n": vals.shape[0]},
                )
                (outdir / f"hist_t{s.t}_{col}.svg").write_text(svg)


def cmd_clt(config: dict, outdir: Path, threads: int | None) -> None:
    plan = build_plan(config, threads)
    summary = run_experiment(plan)
    _write_summary_files(config, outdir, summary, _out_flags(config))
    write_json(outdir / "run_info.json",
               {"wall_time_seconds": summary.wall_time, "threads": plan.threads,
                "note": "timing sidecar; not part of the reproducible data set"})


def _dump_spin_records(plan, outdir: Path, prov: dict) -> None:
    """Replay the last-box measurement streams and dump one colour byte per vertex.

    Uses the same stream keys as the measurement pass, so the dumped spins
    are exactly the configurations behind the summary samples.
    """
    from .clusters import components as _components
    from .coloring import color_clusters
    from .harness import _MEASURE, _chain_sizes, stream_key

    t = plan.t_values[-1]
    t_index = len(plan.t_values) - 1
    g = build_box(plan.d, t, plan.mode)
    cp = plan.color
    if cp.q_colors > 255:
        raise InvalidParameterError("spin dumps store one byte per vertex (<= 255 colours)")
    mixture_cum = None
    if cp.mixture is not None and plan.statistic in ("mixture", "magnetization-ising"):
        mixture_cum = np.cumsum(np.asarray(cp.mixture, dtype=float))
        mixture_cum[-1] = 1.0
    burnin = plan.burnin if plan.burnin is not None else default_burnin(g, plan.algorithm)
    records = []
    for chain, n_keep in enumerate(_chain_sizes(plan.replicates, plan.chains)):
        if n_keep == 0:
            continue
        fk_seed, color_seed = stream_key(plan, _MEASURE, t_index, chain).spawn(2)
        color_rng = np.random.Generator(np.random.PCG64(color_seed))
        for cfg in run_chain(g, plan.params(), plan.algorithm, sweeps=n_keep,
                             burnin=burnin, thin=plan.thin, seed=fk_seed):
            dec = _components(cfg, g)
            if mixture_cum is not None:
                ground = int(np.searchsorted(mixture_cum, color_rng.random(), side="right")) + 1
                ground = min(ground, cp.q_colors)
            else:
                ground = cp.ground_color
            records.append(color_clusters(dec, cp, color_rng, ground_color=ground,
                                          rule=plan.proxy_rule))
    header = {"d": plan.d, "t": t, "mode": plan.mode, "p": plan.p, "q": plan.q,
              "colors": cp.q_colors, "algorithm": plan.algorithm, "seed": plan.seed,
              "n_vertices": g.n_vertices, "n_records": len(records), **prov}
    write_spin_dump(outdir / "spins.dump", header, records)


def cmd_color(config: dict, outdir: Path, threads: int | None) -> None:
    stat = config.get("statistic", "empirical-vector-fixed-r")
    if stat not in ("empirical-vector-fixed-r", "empirical-vector-selfnorm",
                    "mixture", "magnetization-ising"):
        raise InvalidParameterError(
            "config field statistic: the color command needs a coloring statistic")
    if config.get("coloring") is None:
        raise InvalidParameterError("config field coloring: required for the color command")
    config = {**config, "statistic": stat}
    cmd_clt(config, outdir, threads)
    if _out_flags(config)["dump_spins"]:
        _dump_spin_records(build_plan(config, threads), outdir, provenance(config))


def cmd_decay(config: dict, outdir: Path, threads: int | None) -> None:
    config = {**config, "statistic": "decay"}
    plan = build_plan(config, threads)
    summary = run_experiment(plan)
    prov = provenance(config)
    flags = _out_flags(config)
    s = summary.per_t[-1]
    if flags["csv"]:
        rows = [(int(n), float(e), float(se))
                for n, e, se in zip(s.extras["radii"], s.extras["estimate"], s.extras["se"])]
        write_csv(outdir / "decay.csv", ("n", "estimate", "se"), rows, prov)
    if flags["json"]:
        write_json(outdir / "decay.json", sanitize({
            "provenance": prov,
            "t": s.t,
            "radii": s.extras["radii"],
            "estimate": s.extras["estimate"],
            "se": s.extras["se"],
            "fit": s.predicted.get("fit"),
        }))
    write_json(outdir / "run_info.json",
               {"wall_time_seconds": summary.wall_time, "threads": plan.threads,
                "note": "timing sidecar; not part of the reproducible data set"})


COMMANDS = {
    "sample": cmd_sample,
    "exact": cmd_exact,
    "clt": cmd_clt,
    "color": cmd_color,
    "decay": cmd_decay,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fklab",
        description="Random-cluster Monte Carlo laboratory")
    parser.add_argument("--describe", action="store_true",
                        help="print the config schema and exit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    if args.describe:
        print(json.dumps(load_schema(), indent=2))
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        config = json.loads(Path(args.config).read_text())
        validate_config(config)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        COMMANDS[args.command](config, outdir, args.threads)
        print(f"{args.command}: ok ({time.perf_counter() - t0:.1f}s) -> {outdir}")
        return EXIT_OK
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InvalidParameterError, FKLabError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
