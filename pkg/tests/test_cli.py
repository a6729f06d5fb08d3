import json
import os

import pytest

from halfspace_stokes.cli import (COMMANDS, _resolve_threads, emit_plot_data,
                                  main, run)
from halfspace_stokes.report import EstimateReport


def write_config(path, **overrides):
    with open(path, "w") as fh:
        json.dump(overrides, fh)
    return str(path)


class TestExitCodes:
    def test_verify_kernels_passes(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        out = tmp_path / "out"
        assert run("verify-kernels", cfg, str(out)) == 0
        assert (out / "kernel_ratio.csv").exists()
        assert (out / "scaling_gaps.csv").exists()
        assert (out / "kernel_ratio.png").exists()

    def test_fail_verdict_returns_one(self, tmp_path):
        # a contour too coarse for the heat oracle: run completes but the
        # deviation gate fails
        cfg = write_config(tmp_path / "c.json", n_nodes=64,
                           quadrature_tol=1e-3, n_tangential=16, n_cells=96)
        assert run("semigroup", cfg, str(tmp_path / "out")) == 1

    def test_unknown_config_key_returns_two(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", nonsense=1)
        assert run("resolvent", cfg, str(tmp_path / "out")) == 2

    def test_missing_config_returns_two(self, tmp_path):
        assert run("resolvent", str(tmp_path / "nope.json"),
                   str(tmp_path / "out")) == 2

    def test_unknown_command_returns_two(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        assert run("bogus", cfg, str(tmp_path / "out")) == 2

    def test_numerical_failure_returns_three(self, tmp_path):
        # contour construction cannot reach the requested tolerance
        cfg = write_config(tmp_path / "c.json", n_nodes=48,
                           quadrature_tol=1e-10)
        out = tmp_path / "out"
        assert run("semigroup", cfg, str(out)) == 3
        err = json.loads((out / "error.json").read_text())
        assert "error" in err
        assert (out / "manifest.json").exists()


class TestManifest:
    def test_single_manifest_with_outputs(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        out = tmp_path / "out"
        assert run("verify-kernels", cfg, str(out), seed=3) == 0
        manifests = [p for p in os.listdir(out) if p == "manifest.json"]
        assert len(manifests) == 1
        m = json.loads((out / "manifest.json").read_text())
        assert m["command"] == "verify-kernels"
        assert m["seed"] == 3
        assert len(m["config_hash"]) == 64
        assert m["wall_time_s"] > 0
        for rel in m["outputs"]:
            assert os.path.exists(rel)


class TestThreads:
    def test_explicit_argument_wins(self, monkeypatch):
        monkeypatch.setenv("HS_STOKES_THREADS", "4")
        assert _resolve_threads(2) == 2

    def test_environment_fallback(self, monkeypatch):
        monkeypatch.setenv("HS_STOKES_THREADS", "3")
        assert _resolve_threads(0) == 3

    def test_auto_default(self, monkeypatch):
        monkeypatch.delenv("HS_STOKES_THREADS", raising=False)
        assert _resolve_threads(0) == 0


class TestEmitPlotData:
    def test_header_only_when_empty(self, tmp_path):
        paths = emit_plot_data([], str(tmp_path))
        assert len(paths) == 1
        lines = (tmp_path / "estimates.csv").read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("estimate_id,")

    def test_csv_and_figure(self, tmp_path):
        rep = EstimateReport("demo", 4, 1.2, 1.05, "PASS", 0.1)
        paths = emit_plot_data([rep], str(tmp_path))
        assert (tmp_path / "estimates.csv").exists()
        assert (tmp_path / "fitted_constants.png").exists()
        lines = (tmp_path / "estimates.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("demo,4,")


class TestArgumentParsing:
    def test_all_subcommands_registered(self):
        assert set(COMMANDS) == {"resolvent", "semigroup", "ns-mild",
                                 "verify-kernels", "verify-estimates",
                                 "verify-liouville"}

    def test_main_requires_command(self, capsys):
        with pytest.raises(SystemExit):
            main([])

    def test_main_runs_subcommand(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        rc = main(["verify-kernels", "--config", cfg,
                   "--out", str(tmp_path / "out"), "--seed", "1"])
        assert rc == 0
