"""
Tests for the ghz command-line front end.

Runs are kept tiny (N <= 3, short g0T, few samples) and write into tmp_path.
"""

import argparse
import csv
import json

import pytest

import ghz_cli
from ghz_cli import parse_float_grid, parse_int_grid, run
from ghz_chain.export import manifest_path


def _read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def _outputs(tmp_path, pattern):
    return sorted(p for p in tmp_path.glob(pattern) if not p.name.endswith(".manifest.json"))


class TestGridParsing:
    def test_float_list(self):
        assert parse_float_grid("0,0.1,0.5") == [0.0, 0.1, 0.5]

    def test_float_range(self):
        assert parse_float_grid("0:1:3") == [0.0, 0.5, 1.0]

    def test_int_range_inclusive(self):
        assert parse_int_grid("10:30:10") == [10, 20, 30]
        assert parse_int_grid("4,6") == [4, 6]

    def test_bad_grid(self):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_float_grid("a:b")


class TestCommands:
    """Test subcommand runs and their artifacts."""

    def test_spectrum(self, tmp_path):
        code = run(["spectrum", "--N", "3", "--g0T", "70", "--points", "11", "--out", str(tmp_path)])
        assert code == 0
        [path] = _outputs(tmp_path, "spectrum_*.csv")
        rows = _read_csv(path)
        assert rows[0] == ["t", "E_1", "E_2", "E_3", "E_4", "E_5"]
        assert len(rows) == 12
        manifest = json.loads(manifest_path(path).read_text())
        assert manifest["subcommand"] == "spectrum"
        assert manifest["spec"]["N"] == 3
        assert manifest["parameters"]["points"] == 11
        assert len(manifest["results"]["spec_hash"]) == 64

    def test_spectrum_ratios(self, tmp_path):
        code = run(["spectrum", "--N", "2", "--ratios", "0:2:5", "--out", str(tmp_path)])
        assert code == 0
        [path] = _outputs(tmp_path, "spectrum_*.csv")
        rows = _read_csv(path)
        assert rows[0][0] == "J1/J2"
        assert [row[0] for row in rows[1:]] == ["0", "0.5", "1", "1.5", "2"]

    def test_zero_mode(self, tmp_path):
        code = run(["zero-mode", "--N", "2", "--g0T", "70", "--points", "5", "--out", str(tmp_path)])
        assert code == 0
        [path] = _outputs(tmp_path, "zero-mode_*.csv")
        assert _read_csv(path)[0] == ["t", "e@A1", "ph@B1", "e@A2"]
        assert len(_outputs(tmp_path, "adiabaticity_*.csv")) == 1

    def test_ghz(self, tmp_path, capsys):
        code = run(["ghz", "--N", "2", "--g0T", "60", "--times", "11", "--snapshots", "--out", str(tmp_path)])
        assert code == 0
        assert "final GHZ fidelity" in capsys.readouterr().out
        [path] = _outputs(tmp_path, "ghz_*.csv")
        rows = _read_csv(path)
        assert rows[0] == ["t", "norm", "ghz_initial", "ghz_ideal", "left_edge", "right_edge"]
        assert len(rows) == 12
        [snapshots] = _outputs(tmp_path, "ghz-snapshots_*.csv")
        assert _read_csv(snapshots)[0][-2:] == ["re[G]", "im[G]"]

    def test_evolve_prints_norm(self, tmp_path, capsys):
        code = run(["evolve", "--N", "2", "--g0T", "60", "--gamma", "0.01", "--kappa", "0.01",
                    "--times", "3", "--out", str(tmp_path)])
        assert code == 0
        assert "final norm" in capsys.readouterr().out

    def test_disorder_sweep(self, tmp_path):
        code = run(["disorder-sweep", "--N", "2", "--g0T", "60", "--deltas", "0,0.2", "--samples", "2",
                    "--seed", "5", "--out", str(tmp_path)])
        assert code == 0
        [path] = _outputs(tmp_path, "disorder-sweep_*.csv")
        rows = _read_csv(path)
        assert rows[0] == ["delta", "mean_F", "stderr", "n_samples"]
        assert len(rows) == 3
        [summary] = _outputs(tmp_path, "disorder-sweep_*.json")
        assert json.loads(summary.read_text())["provenance"]["seed"] == 5

    def test_loss_sweep_cartesian(self, tmp_path):
        code = run(["loss-sweep", "--N", "2", "--g0T", "60", "--gammas", "0,0.01", "--kappas", "0,0.02",
                    "--cartesian", "--out", str(tmp_path)])
        assert code == 0
        [path] = _outputs(tmp_path, "loss-sweep_*.csv")
        assert len(_read_csv(path)) == 5

    def test_config_file(self, tmp_path):
        config = tmp_path / "chain.yaml"
        config.write_text("N: 2\nT: 60\nscheme: C\n")
        code = run(["spectrum", "--config", str(config), "--points", "3", "--out", str(tmp_path)])
        assert code == 0
        [path] = _outputs(tmp_path, "spectrum_*.csv")
        assert json.loads(manifest_path(path).read_text())["spec"]["scheme"] == "C"

    def test_same_run_same_name(self, tmp_path):
        argv = ["spectrum", "--N", "2", "--g0T", "70", "--points", "3", "--out", str(tmp_path)]
        assert run(argv) == 0
        assert run(argv) == 0
        assert len(_outputs(tmp_path, "spectrum_*.csv")) == 1

    def test_manifest_replay(self, tmp_path):
        assert run(["spectrum", "--N", "3", "--g0T", "70", "--points", "4", "--out", str(tmp_path)]) == 0
        [path] = _outputs(tmp_path, "spectrum_*.csv")
        original = path.read_text()
        path.unlink()
        assert run(["--manifest", str(manifest_path(path))]) == 0
        assert path.read_text() == original


class TestExitCodes:
    """Test error reporting."""

    def test_invalid_spec(self, tmp_path, capsys):
        code = run(["spectrum", "--N", "1", "--out", str(tmp_path)])
        assert code == 2
        assert "N" in capsys.readouterr().err

    def test_missing_n(self, tmp_path):
        assert run(["spectrum", "--out", str(tmp_path)]) == 2

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "chain.yaml"
        config.write_text("N: 2\nbogus: 1\n")
        assert run(["spectrum", "--config", str(config), "--out", str(tmp_path)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert run(["spectrum", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 2

    def test_unknown_scheme(self, tmp_path):
        assert run(["spectrum", "--N", "2", "--scheme", "D", "--out", str(tmp_path)]) == 2

    def test_no_command(self):
        assert run([]) == 2

    def test_loss_sweep_needs_a_grid(self, tmp_path):
        assert run(["loss-sweep", "--N", "2", "--g0T", "60", "--out", str(tmp_path)]) == 2

    def test_oracle_too_large(self, tmp_path):
        code = run(["oracle-check", "--N", "5", "--g0T", "10", "--points", "3", "--out", str(tmp_path)])
        assert code == 1

    def test_oracle_mismatch(self, tmp_path, monkeypatch):
        monkeypatch.setattr(ghz_cli, "compare_subspace_oracle", lambda spec, times: 1.0)
        code = run(["oracle-check", "--N", "2", "--g0T", "10", "--out", str(tmp_path)])
        assert code == 1
        [path] = _outputs(tmp_path, "oracle-check_*.json")
        assert json.loads(path.read_text())["max_deviation"] == 1.0

    def test_numerical_value_error_is_a_run_failure(self, tmp_path, monkeypatch):
        def failing(*args, **kwargs):
            raise ValueError("array must not contain infs or NaNs")

        monkeypatch.setattr(ghz_cli, "evolve", failing)
        code = run(["evolve", "--N", "2", "--g0T", "20", "--times", "3", "--out", str(tmp_path)])
        assert code == 1

    def test_non_positive_coherence_time(self, tmp_path):
        code = run(["scale-study", "--N", "2", "--Ns", "10,20,30", "--tau-a", "0", "--out", str(tmp_path)])
        assert code == 2

    def test_zero_samples_rejected(self, tmp_path):
        assert run(["ghz", "--N", "2", "--g0T", "20", "--times", "0", "--out", str(tmp_path)]) == 2

