"""CLI behaviour, including the acceptance checks for the plotting surface."""

import subprocess
import sys

from fedplots.cli import main


class TestCliSweep:
    def test_renders_image(self, sweep_csv, summary_json, tmp_path, capsys):
        out = tmp_path / "sweep.svg"
        code = main(["sweep", "--in", sweep_csv, "--dpmm", summary_json,
                     "--out", str(out)])
        assert code == 0
        assert out.stat().st_size > 0

    def test_schema_violation_names_column(self, summary_json, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("K,seed,round,K_t,acc_mean\n1,0,1,1,0.5\n")
        code = main(["sweep", "--in", str(bad), "--dpmm", summary_json,
                     "--out", str(tmp_path / "x.svg")])
        assert code != 0
        err = capsys.readouterr().err
        assert "missing column" in err
        assert "f1_mean" in err

    def test_missing_file_fails(self, summary_json, tmp_path, capsys):
        code = main(["sweep", "--in", str(tmp_path / "nope.csv"),
                     "--dpmm", summary_json, "--out", str(tmp_path / "x.svg")])
        assert code != 0


class TestCliConvergence:
    def test_renders_image(self, run_csv, tmp_path):
        out = tmp_path / "conv.svg"
        assert main(["convergence", "--in", run_csv, "--out", str(out)]) == 0
        assert out.stat().st_size > 0

    def test_missing_column_named(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("round,K_t,acc_mean\n1,1,0.5\n")
        code = main(["convergence", "--in", str(bad),
                     "--out", str(tmp_path / "x.svg")])
        assert code != 0
        assert "missing column" in capsys.readouterr().err

    def test_console_script_runs_headless(self, run_csv, tmp_path):
        env_cmd = [sys.executable, "-m", "fedplots.cli", "convergence",
                   "--in", run_csv, "--out", str(tmp_path / "c.svg")]
        result = subprocess.run(env_cmd, capture_output=True, text=True,
                                env={"PATH": "/usr/bin:/bin", "HOME": "/root",
                                     "MPLBACKEND": "Agg"})
        assert result.returncode == 0, result.stderr
