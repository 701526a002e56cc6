"""Config loading, CLI subcommands, CSV/JSON outputs, exit codes."""

import json
import subprocess
import sys
import time

import pytest

from fedclust.cli import main
from fedclust.config import ConfigError, load_config, parse_overrides, resolve
from fedclust.metrics import CSV_HEADER

QUICK = """
seed: 0
run:
  rounds: 1
  seeds: 1
pool:
  num_classes: 4
  samples_per_class: 40
  feature_dim: 4
  class_separation: 3.0
  noise_sd: 1.0
partition:
  scheme: dirichlet
  k_true: 2
  num_clients: 4
  alpha_inter: 0.3
  alpha_intra: 100.0
"""


@pytest.fixture
def quick_config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(QUICK)
    return str(path)


class TestConfig:
    def test_defaults_mirror_reference_settings(self):
        cfg = resolve({"run": {"rounds": 2}, "partition": {"num_clients": 4}})
        assert cfg.run.sgd.learning_rate == 0.005
        assert cfg.run.sgd.momentum == 0.9
        assert cfg.run.sgd.batch_size == 32
        assert cfg.run.sgd.local_steps == 10
        assert cfg.run.dp.alpha == 1.0
        assert cfg.run.dp.sigma0_sq == 1.0
        assert cfg.run.dp.mu0 == 0.0
        assert cfg.run.partition.alpha_inter == 0.1
        assert cfg.run.partition.alpha_intra == 10.0

    def test_missing_required_key_named(self):
        with pytest.raises(ConfigError, match="run.rounds"):
            resolve({"partition": {"num_clients": 4}})
        with pytest.raises(ConfigError, match="partition.num_clients"):
            resolve({"run": {"rounds": 1}})

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="sgd.lr"):
            resolve({"run": {"rounds": 1}, "partition": {"num_clients": 4},
                     "sgd": {"lr": 0.1}})

    def test_overrides_parse_types(self):
        parsed = parse_overrides(["sgd.learning_rate=0.5", "run.rounds=4",
                                  "sampler.warm_start=false"])
        assert parsed["sgd"]["learning_rate"] == 0.5
        assert parsed["run"]["rounds"] == 4
        assert parsed["sampler"]["warm_start"] is False

    def test_yaml_error_is_line_anchored(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("run:\n  rounds: [unclosed\n")
        with pytest.raises(ConfigError, match=r"bad\.yaml:\d+"):
            load_config(str(path))


class TestCliRun:
    def test_single_round_csv_shape(self, quick_config, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", quick_config, "--out", str(out)]) == 0
        csv = out / "dpmm_seed0.csv"
        lines = csv.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["algorithm"] == "dpmm"
        assert summary["final_k"] == {"0": int(lines[1].split(",")[1])}
        assert summary["version"].startswith("fedclust-")
        assert summary["config"]["run"]["rounds"] == 1

    def test_rerun_is_bytewise_identical(self, quick_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", quick_config, "--out", str(out1)])
        main(["run", "--config", quick_config, "--out", str(out2)])
        assert (out1 / "dpmm_seed0.csv").read_bytes() == \
            (out2 / "dpmm_seed0.csv").read_bytes()
        assert (out1 / "summary.json").read_bytes() == \
            (out2 / "summary.json").read_bytes()

    def test_missing_key_exits_2_and_names_key(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("partition:\n  num_clients: 4\n")
        code = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "run.rounds" in capsys.readouterr().err

    def test_algorithm_and_seed_flags(self, quick_config, tmp_path):
        out = tmp_path / "out"
        code = main(["run", "--config", quick_config, "--out", str(out),
                     "--algorithm", "global", "--seed", "3"])
        assert code == 0
        assert (out / "global_seed3.csv").exists()

    def test_out_dir_env_var(self, quick_config, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("FEDCLUST_OUT", str(target))
        assert main(["run", "--config", quick_config]) == 0
        assert (target / "dpmm_seed0.csv").exists()

    def test_set_override(self, quick_config, tmp_path):
        out = tmp_path / "out"
        code = main(["run", "--config", quick_config, "--out", str(out),
                     "--set", "run.rounds=2"])
        assert code == 0
        lines = (out / "dpmm_seed0.csv").read_text().splitlines()
        assert len(lines) == 3


class TestCliSweep:
    def test_row_counts(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text(QUICK + "\n")
        out = tmp_path / "out"
        code = main(["sweep", "--config", str(path), "--out", str(out),
                     "--set", "run.sweep_k=[1,2,3]",
                     "--set", "run.seeds=2",
                     "--set", "run.rounds=5"])
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "K,seed," + CSV_HEADER
        assert len(lines) == 1 + 3 * 2 * 5

    def test_sweep_k1_matches_global_run(self, quick_config, tmp_path):
        out = tmp_path / "out"
        main(["sweep", "--config", quick_config, "--out", str(out),
              "--set", "run.sweep_k=[1]", "--set", "run.rounds=3"])
        main(["run", "--config", quick_config, "--out", str(out),
              "--algorithm", "global", "--set", "run.rounds=3"])
        sweep_rows = [l.split(",", 2)[2] for l in
                      (out / "sweep.csv").read_text().splitlines()[1:]]
        glob_rows = (out / "global_seed0.csv").read_text().splitlines()[1:]
        assert sweep_rows == glob_rows


class TestCliValidate:
    def test_fast_level_passes_quickly(self, capsys):
        start = time.time()
        code = main(["validate", "--level", "fast"])
        elapsed = time.time() - start
        out = capsys.readouterr().out
        assert code == 0
        assert elapsed < 60.0
        assert "[PASS]" in out
        assert "[FAIL]" not in out

    def test_console_entrypoint_runs(self, quick_config, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "fedclust.cli", "run", "--config",
             quick_config, "--out", str(tmp_path / "o")],
            capture_output=True, text=True)
        assert result.returncode == 0
