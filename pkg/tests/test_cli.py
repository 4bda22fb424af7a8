import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from walshbo.cli import (ExperimentConfig, load_config, main, run_experiment,
                         validate_config)

FAST = {
    "benchmark": "labs",
    "labs_n": 6,
    "budget": 8,
    "init_count": 3,
    "seed": 5,
    "repeats": 2,
    "hyper_beta_grid": [0.2, 0.8],
    "hyper_noise_grid": [0.01, 0.3],
}


def write_config(tmp_path, overrides=None, name="config.json"):
    cfg = dict(FAST)
    cfg.update(overrides or {})
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestValidateConfig:
    def test_valid_file(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert validate_config(path) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_budget_below_init(self, tmp_path, capsys):
        path = write_config(tmp_path, {"budget": 2, "init_count": 5})
        assert validate_config(path) == 1
        assert "budget" in capsys.readouterr().out

    def test_unknown_benchmark(self, tmp_path, capsys):
        path = write_config(tmp_path, {"benchmark": "rastrigin"})
        assert validate_config(path) == 1
        assert "benchmark" in capsys.readouterr().out

    def test_unknown_field(self, tmp_path):
        path = write_config(tmp_path, {"bugdet": 10})
        cfg, problems = load_config(path)
        assert any("bugdet" in p for p in problems)

    def test_unreadable_file(self, tmp_path):
        assert validate_config(tmp_path / "missing.json") == 1


class TestRunExperiment:
    def test_init_only_run_row_count(self, tmp_path):
        cfg, problems = load_config(write_config(
            tmp_path, {"budget": 3, "init_count": 3, "repeats": 1,
                       "output_dir": str(tmp_path / "out")}))
        assert not problems
        assert run_experiment(cfg) == 0
        rows = read_csv(tmp_path / "out" / "runs" / "run_000.csv")
        assert len(rows) == 3

    def test_summary_mean_and_stderr_identity(self, tmp_path):
        cfg, _ = load_config(write_config(
            tmp_path, {"output_dir": str(tmp_path / "out"), "repeats": 3}))
        assert run_experiment(cfg) == 0
        runs = [read_csv(tmp_path / "out" / "runs" / f"run_{i:03d}.csv")
                for i in range(3)]
        summary = read_csv(tmp_path / "out" / "summary.csv")
        for t, row in enumerate(summary):
            values = [float(r[t]["best_so_far"]) for r in runs]
            mean = sum(values) / 3
            stderr = np.std(values, ddof=1) / math.sqrt(3)
            assert abs(float(row["mean_best_so_far"]) - mean) <= 1e-12
            assert abs(float(row["stderr_best_so_far"]) - stderr) <= 1e-12

    def test_rerun_is_byte_identical(self, tmp_path):
        path = write_config(tmp_path, {"output_dir": str(tmp_path / "a")})
        cfg, _ = load_config(path)
        run_experiment(cfg)
        cfg2, _ = load_config(path)
        cfg2.output_dir = str(tmp_path / "b")
        run_experiment(cfg2)
        for rel in ("summary.csv", "runs/run_000.csv", "runs/run_001.csv"):
            assert (Path(tmp_path / "a") / rel).read_bytes() == \
                   (Path(tmp_path / "b") / rel).read_bytes()

    def test_manifest_records_seeds_and_versions(self, tmp_path):
        cfg, _ = load_config(write_config(
            tmp_path, {"output_dir": str(tmp_path / "out")}))
        run_experiment(cfg)
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 5
        assert [r["seed"]["spawn_key"] for r in manifest["runs"]] == [[0], [1]]
        assert "numpy" in manifest["versions"]
        assert manifest["total_wall_time_s"] > 0

    def test_csv_schema(self, tmp_path):
        cfg, _ = load_config(write_config(
            tmp_path, {"output_dir": str(tmp_path / "out"), "repeats": 1}))
        run_experiment(cfg)
        rows = read_csv(tmp_path / "out" / "runs" / "run_000.csv")
        assert list(rows[0].keys()) == [
            "run_id", "iteration", "batch_id", "point_bits", "objective",
            "best_so_far", "batch_diversity", "wall_time_s"]
        assert rows[0]["point_bits"].count("0") + \
            rows[0]["point_bits"].count("1") == 6

    def test_ising_export_written(self, tmp_path):
        cfg, _ = load_config(write_config(tmp_path, {
            "benchmark": "ising", "ising_seed": 1, "ising_lambda": 0.0,
            "budget": 6, "init_count": 5, "repeats": 1,
            "output_dir": str(tmp_path / "out")}))
        assert run_experiment(cfg) == 0
        spec = json.loads((tmp_path / "out" / "ising_spec.json").read_text())
        assert len(spec["couplings"]) == 24

    def test_partial_failure_recorded_in_manifest(self, tmp_path, monkeypatch):
        import walshbo.cli as cli_mod
        from walshbo.errors import RunAbortedError
        real_run_bo = cli_mod.run_bo
        calls = {"n": 0}

        def flaky_run(cfg):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RunAbortedError("objective evaluation failed: boom",
                                      history=None)
            return real_run_bo(cfg)

        monkeypatch.setattr(cli_mod, "run_bo", flaky_run)
        cfg, _ = load_config(write_config(
            tmp_path, {"output_dir": str(tmp_path / "out"), "repeats": 3}))
        assert run_experiment(cfg) == 2
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        statuses = [r["status"] for r in manifest["runs"]]
        assert statuses == ["ok", "aborted", "ok"]
        assert "boom" in manifest["runs"][1]["message"]

    def test_tabular_with_worst_decile_init(self, tmp_path):
        import itertools
        rng = np.random.default_rng(0)
        rows = [f"{''.join(s)},{rng.normal():.6f}"
                for s in itertools.product("01", repeat=4)]
        table = tmp_path / "table.csv"
        table.write_text("sequence,value\n" + "\n".join(rows) + "\n")
        cfg, problems = load_config(write_config(tmp_path, {
            "benchmark": "tabular", "tabular_path": str(table),
            "budget": 7, "init_count": 3, "repeats": 1,
            "init_strategy": "worst_decile",
            "output_dir": str(tmp_path / "out")}))
        assert not problems
        assert run_experiment(cfg) == 0
        assert len(read_csv(tmp_path / "out" / "runs" / "run_000.csv")) == 7


class TestMain:
    def test_validate_subcommand(self, tmp_path):
        assert main(["validate", str(write_config(tmp_path))]) == 0

    def test_run_with_overrides(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "cli_out"
        assert main(["run", str(path), "--output-dir", str(out),
                     "--repeats", "1", "--seed", "9"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 9
        assert manifest["config"]["repeats"] == 1

    def test_config_error_exit_code(self, tmp_path):
        path = write_config(tmp_path, {"budget": 0})
        assert main(["run", str(path)]) == 1

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json")]) == 1

    def test_thread_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("WALSHBO_THREADS", "3")
        path = write_config(tmp_path, {"budget": 10, "batch_size": 3,
                                       "repeats": 1})
        out = tmp_path / "threaded"
        assert main(["run", str(path), "--output-dir", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["threads"] == 3
