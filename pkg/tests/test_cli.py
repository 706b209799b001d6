import json
from pathlib import Path

import jsonschema

from fklab.cli import main
from fklab.io_formats import read_config_dump, read_csv


def write_config(tmp_path, name="cfg.json", **overrides):
    cfg = {
        "seed": 42,
        "geometry": {"d": 2, "t": 6, "mode": "free"},
        "fk": {"p": 0.5, "q": 1.0},
        "sampling": {"replicates": 10, "thin": 1, "chains": 2,
                     "calibration_replicates": 20},
    }
    for key, val in overrides.items():
        if key != "geometry" and isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path, cfg


class TestValidation:
    def test_minimal_sample_run(self, tmp_path):
        cfg, _ = write_config(tmp_path, output={"dump_configs": True})
        out = tmp_path / "out"
        assert main(["sample", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "per_config.csv").exists()
        assert (out / "cluster_report.json").exists()
        header, configs = read_config_dump(out / "configs.dump")
        assert header["n_records"] == len(configs) == 10

    def test_invalid_q_names_field(self, tmp_path, capsys):
        cfg, _ = write_config(tmp_path, fk={"p": 0.5, "q": -1})
        assert main(["sample", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "fk.q" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path):
        cfg, _ = write_config(tmp_path, wibble=3)
        assert main(["sample", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_resource_cap_exit_3(self, tmp_path):
        cfg, _ = write_config(tmp_path, geometry={"d": 2, "t": 40, "mode": "free"},
                              max_vertices=100)
        assert main(["sample", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_exact_cap_exit_3(self, tmp_path):
        cfg, _ = write_config(tmp_path, geometry={"d": 2, "t": 2, "mode": "free"})
        assert main(["exact", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_exact_distribution_export(self, tmp_path):
        cfg, _ = write_config(tmp_path, geometry={"d": 2, "t": 1, "mode": "free"},
                              fk={"p": 0.6, "q": 2.0},
                              exact={"export_distribution": True})
        out = tmp_path / "o"
        assert main(["exact", "--config", str(cfg), "--out", str(out)]) == 0
        header, columns, rows = read_csv(out / "distribution.csv")
        assert columns == ["mask", "probability"]
        assert len(rows) == 1 << 12
        total = sum(float(r[1]) for r in rows)
        assert abs(total - 1.0) < 1e-9

    def test_duality_needs_d2(self, tmp_path):
        cfg, _ = write_config(tmp_path, geometry={"d": 3, "t": 1, "mode": "free"},
                              exact={"duality": True})
        assert main(["exact", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_describe(self, capsys):
        assert main(["--describe"]) == 0
        schema = json.loads(capsys.readouterr().out)
        assert schema["title"].startswith("fklab")


class TestReproducibility:
    def test_sample_rerun_identical(self, tmp_path):
        cfg, _ = write_config(tmp_path, output={"dump_configs": True})
        a, b = tmp_path / "a", tmp_path / "b"
        main(["sample", "--config", str(cfg), "--out", str(a)])
        main(["sample", "--config", str(cfg), "--out", str(b)])
        for name in ("per_config.csv", "cluster_report.json", "configs.dump"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_clt_threads_identical(self, tmp_path):
        cfg, _ = write_config(
            tmp_path,
            geometry={"d": 2, "t_values": [4, 6], "mode": "wired"},
            fk={"p": 0.8, "q": 2.0},
            statistic="infinite-density",
            sampling={"replicates": 30, "thin": 1, "chains": 4,
                      "calibration_replicates": 20},
        )
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["clt", "--config", str(cfg), "--out", str(a), "--threads", "1"]) == 0
        assert main(["clt", "--config", str(cfg), "--out", str(b), "--threads", "8"]) == 0
        for name in ("summary.json", "samples.csv", "hist_t4_value.svg",
                     "hist_t6_value.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestOutputs:
    def test_summary_validates_against_schema(self, tmp_path):
        # two-replicate smoke plan: completes and emits schema-valid output
        cfg, _ = write_config(
            tmp_path,
            geometry={"d": 2, "t": 5, "mode": "wired"},
            fk={"p": 0.7, "q": 2.0},
            statistic="magnetization-ising",
            coloring={"colors": 2, "mixture": [0.5, 0.5]},
            sampling={"replicates": 2, "thin": 1, "chains": 2,
                      "calibration_replicates": 16},
        )
        out = tmp_path / "out"
        assert main(["color", "--config", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        schema = json.loads(
            (Path(__file__).resolve().parents[1] / "src/fklab/schemas/summary.schema.json")
            .read_text())
        jsonschema.validate(summary, schema)
        assert summary["provenance"]["master_seed"] == 42

    def test_samples_csv_columns(self, tmp_path):
        cfg, _ = write_config(
            tmp_path,
            geometry={"d": 2, "t": 5, "mode": "wired"},
            fk={"p": 0.7, "q": 2.0},
            statistic="empirical-vector-selfnorm",
            coloring={"colors": 2},
            sampling={"replicates": 8, "thin": 1, "chains": 2,
                      "calibration_replicates": 16},
        )
        out = tmp_path / "out"
        assert main(["clt", "--config", str(cfg), "--out", str(out)]) == 0
        header, columns, rows = read_csv(out / "samples.csv")
        assert columns == ["replicate", "t", "value_1", "value_2", "phase"]
        assert len(rows) == 8
        assert "config_hash" in header

    def test_decay_outputs(self, tmp_path):
        cfg, _ = write_config(
            tmp_path,
            geometry={"d": 2, "t": 10, "mode": "free"},
            fk={"p": 0.35, "q": 1.0},
            sampling={"replicates": 300, "thin": 1, "chains": 4,
                      "calibration_replicates": 16},
            analysis={"decay_n_min": 1, "decay_n_max": 6},
        )
        out = tmp_path / "out"
        assert main(["decay", "--config", str(cfg), "--out", str(out)]) == 0
        payload = json.loads((out / "decay.json").read_text())
        assert payload["fit"]["rate"] > 0
        header, columns, rows = read_csv(out / "decay.csv")
        assert columns == ["n", "estimate", "se"]
        assert len(rows) == 6

    def test_color_requires_coloring_stat(self, tmp_path):
        cfg, _ = write_config(tmp_path, statistic="infinite-density")
        assert main(["color", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_svg_quicklook_well_formed(self, tmp_path):
        import xml.etree.ElementTree as ET

        cfg, _ = write_config(
            tmp_path,
            geometry={"d": 2, "t": 5, "mode": "wired"},
            fk={"p": 0.8, "q": 2.0},
            statistic="infinite-density",
            sampling={"replicates": 50, "thin": 1, "chains": 2,
                      "calibration_replicates": 20},
        )
        out = tmp_path / "out"
        assert main(["clt", "--config", str(cfg), "--out", str(out)]) == 0
        tree = ET.parse(out / "hist_t5_value.svg")
        assert tree.getroot().tag.endswith("svg")
