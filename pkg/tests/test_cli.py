"""Command-line interface: subcommands, exit codes, and output files."""

import os

import pytest
import yaml

from hrcn.cli import main
from hrcn.scenario import default_scenario_path


def _infeasible_scenario(tmp_path):
    """Throughput floor far beyond what the base-station budget can reach."""
    with open(default_scenario_path()) as fh:
        raw = yaml.safe_load(fh)
    raw["comm"]["throughput_floor"] = [50.0, 50.0, 50.0]
    path = tmp_path / "infeasible.yaml"
    path.write_text(yaml.safe_dump(raw))
    return str(path)


class TestSolve:
    def test_solve_prints_metric(self, capsys):
        assert main(["solve", "--interval", "0"]) == 0
        out = capsys.readouterr().out
        assert "g = " in out
        assert "Pc[link1]" in out

    def test_infeasible_exits_one(self, tmp_path, capsys):
        path = _infeasible_scenario(tmp_path)
        assert main(["solve", "--scenario", path]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_scenario_exits_one(self, capsys):
        assert main(["solve", "--scenario", "/nonexistent.yaml"]) == 1


class TestUsage:
    def test_no_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_bad_policy_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--policy", "greedy"])
        assert exc.value.code == 2


class TestSimulate:
    def test_writes_track_history(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert main(["simulate", "--policy", "uniform", "--out", out]) == 0
        path = os.path.join(out, "track_history.csv")
        assert os.path.exists(path)
        with open(path) as fh:
            lines = fh.read().strip().splitlines()
        assert lines[0].startswith("trial,target,k,")
        assert len(lines) == 1 + 2 * 10  # Q=2 targets, K=10 intervals


class TestCompare:
    def test_deterministic_result_files(self, tmp_path):
        args = ["compare", "--policies", "uniform", "random",
                "--trials", "2", "--seed", "7"]
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(args + ["--out", out_a]) == 0
        assert main(args + ["--out", out_b]) == 0
        for name in ("manifest.json", "results.csv"):
            with open(os.path.join(out_a, name), "rb") as fh:
                blob_a = fh.read()
            with open(os.path.join(out_b, name), "rb") as fh:
                blob_b = fh.read()
            assert blob_a == blob_b, f"{name} differs between identical runs"

    def test_prints_table(self, tmp_path, capsys):
        out = str(tmp_path / "c")
        assert main(["compare", "--policies", "uniform", "--trials", "1",
                     "--out", out]) == 0
        assert "avg RMSE" in capsys.readouterr().out


class TestSweep:
    def test_metric_nonincreasing_in_floor(self, tmp_path, capsys):
        out = str(tmp_path / "sweep")
        assert main(["sweep", "--param", "floor",
                     "--values", "0.5", "2.0", "3.0", "--out", out]) == 0
        path = os.path.join(out, "sweep.csv")
        with open(path) as fh:
            rows = fh.read().strip().splitlines()[1:]
        g_values = [float(r.split(",")[1]) for r in rows]
        assert all(a >= b - 1e-9 for a, b in zip(g_values, g_values[1:]))

    def test_env_output_dir(self, tmp_path, monkeypatch):
        outdir = str(tmp_path / "envout")
        monkeypatch.setenv("HRCN_OUTPUT_DIR", outdir)
        assert main(["compare", "--policies", "uniform", "--trials", "1"]) == 0
        assert os.path.exists(os.path.join(outdir, "manifest.json"))
