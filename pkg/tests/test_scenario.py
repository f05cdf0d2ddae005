import json
import math
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from curvlab.scenario import (
    ConfigError,
    emit_report,
    load_config,
    run_scenario,
    sweep,
)


def bundled(name: str) -> dict:
    path = resources.files("curvlab") / "scenarios" / f"{name}.json"
    return json.loads(path.read_text())


def small_z2_config(**overrides):
    cfg = {
        "surface": {"kind": "catalogue", "name": "holo-curve", "params": {"coeffs": [0, 0, 1]}},
        "grid": {"ranges": [[-1.0, 1.0], [-1.0, 1.0]], "counts": [5, 5]},
        "checks": [{"name": "minimality"}, {"name": "simons"}],
    }
    cfg.update(overrides)
    return cfg


class TestConfigValidation:
    def test_unknown_check_names_field(self):
        cfg = small_z2_config(checks=[{"name": "bogus"}])
        with pytest.raises(ConfigError) as err:
            load_config(cfg)
        assert "checks[0].name" in str(err.value)

    def test_nonpositive_tolerance(self):
        cfg = small_z2_config(checks=[{"name": "minimality", "tol": 0.0}])
        with pytest.raises(ConfigError, match="checks\\[0\\].tol"):
            load_config(cfg)

    def test_probe_domain_rejected_with_constraint_message(self):
        cfg = small_z2_config(probe={"t": 2, "q": 9})
        with pytest.raises(ConfigError, match="t >= 3"):
            load_config(cfg)
        cfg = small_z2_config(probe={"t": 3, "q": 3})
        with pytest.raises(ConfigError, match=r"q > \(3t-3\)/2"):
            load_config(cfg)

    def test_grid_shape_must_match_surface(self):
        cfg = small_z2_config(grid={"ranges": [[-1, 1]], "counts": [5]})
        with pytest.raises(ConfigError, match="grid.ranges"):
            load_config(cfg)

    def test_reference_frame_must_be_orthonormal(self):
        cfg = small_z2_config(reference_frame=[[1, 1, 0, 0], [0, 1, 0, 0]])
        with pytest.raises(ConfigError, match="orthonormal"):
            load_config(cfg)

    def test_graph_surface_expressions(self):
        cfg = small_z2_config(
            surface={"kind": "graph", "exprs": ["x^3 - 3*x*y^2", "3*x^2*y - y^3"], "n": 2}
        )
        config = load_config(cfg)
        assert config.surface.kind == "graph"
        report = run_scenario(config)
        assert report.overall == "pass"  # z^3 is holomorphic, hence minimal

    def test_graph_check_on_parametric_surface_rejected(self):
        cfg = {
            "surface": {"kind": "catalogue", "name": "catenoid"},
            "grid": {"ranges": [[-1, 1], [-1, 1]], "counts": [3, 3]},
            "checks": [{"name": "jacobian"}],
        }
        with pytest.raises(ConfigError, match="graph"):
            load_config(cfg)


class TestRunScenario:
    def test_z2_full_passes(self):
        report = run_scenario(load_config(bundled("z2-full")))
        assert report.overall == "pass"
        assert {r.name for r in report.results} >= {"minimality", "simons", "kato"}

    def test_catenoid_kato_equality_statistics(self):
        report = run_scenario(load_config(bundled("catenoid-kato")))
        assert report.overall == "pass"
        kato = next(r for r in report.results if r.name == "kato")
        assert kato.extras["equality_points"] == kato.extras["evaluated_points"]

    def test_not_applicable_does_not_fail_overall(self):
        cfg = {
            "surface": {"kind": "catalogue", "name": "affine"},
            "grid": {"ranges": [[-1, 1], [-1, 1]], "counts": [3, 3]},
            "checks": [{"name": "kato"}, {"name": "minimality"}],
        }
        report = run_scenario(load_config(cfg))
        kato = next(r for r in report.results if r.name == "kato")
        assert kato.verdict == "not-applicable"
        assert report.overall == "pass"

    def test_failing_check_fails_overall(self):
        cfg = {
            "surface": {"kind": "graph", "exprs": ["x^2 + y^2", "0"], "n": 2},
            "grid": {"ranges": [[-1, 1], [-1, 1]], "counts": [5, 5]},
            "checks": [{"name": "minimality"}],
        }
        report = run_scenario(load_config(cfg))
        assert report.overall == "fail"
        assert report.results[0].worst_residual >= 2.0

    def test_partial_evaluation_errors_are_collected(self):
        # log(x) is undefined for x <= 0: half the grid errors, half evaluates
        cfg = {
            "surface": {"kind": "graph", "exprs": ["log(x)", "0"], "n": 2},
            "grid": {"ranges": [[-1.0, 1.0], [-1.0, 1.0]], "counts": [4, 3]},
            "checks": [{"name": "minimality"}],
        }
        report = run_scenario(load_config(cfg))
        res = report.results[0]
        assert res.n_skipped == 6
        assert res.n_points == 12


class TestEmission:
    def test_empty_check_list_gives_header_only_csv(self, tmp_path):
        cfg = small_z2_config(checks=[])
        report = run_scenario(load_config(cfg))
        out = tmp_path / "empty.csv"
        emit_report(report, "csv", out)
        assert out.read_text() == "check,u1,u2,u3,residual,status\n"

    def test_json_round_trip(self, tmp_path):
        report = run_scenario(load_config(bundled("z2-full")))
        out = tmp_path / "z2.json"
        emit_report(report, "json", out, detail=True)
        data = json.loads(out.read_text())
        assert data["overall"] == "pass"
        for entry in data["checks"]:
            assert "worst_residual" in entry
        # full double precision round trip
        worst = {e["name"]: e["worst_residual"] for e in data["checks"]}
        for res in report.results:
            assert worst[res.name] == res.worst_residual

    def test_same_config_twice_is_byte_identical(self, tmp_path):
        config = load_config(bundled("catenoid-kato"))
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        emit_report(run_scenario(config), "json", a, detail=True)
        emit_report(run_scenario(config), "json", b, detail=True)
        assert a.read_bytes() == b.read_bytes()

    def test_parallelism_does_not_change_output(self, tmp_path):
        config = load_config(small_z2_config())
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        emit_report(run_scenario(config, jobs=1), "json", a, detail=True)
        emit_report(run_scenario(config, jobs=2), "json", b, detail=True)
        assert a.read_bytes() == b.read_bytes()

    def test_csv_rows_per_point(self, tmp_path):
        cfg = small_z2_config(checks=[{"name": "minimality"}])
        report = run_scenario(load_config(cfg))
        out = tmp_path / "rows.csv"
        emit_report(report, "csv", out)
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 25
        assert lines[1].startswith("minimality,-1.0,-1.0,,")


class TestSweep:
    def test_radii_sweep_on_affine(self):
        cfg = {
            "surface": {"kind": "catalogue", "name": "affine"},
            "grid": {"ranges": [[-1, 1], [-1, 1]], "counts": [3, 3]},
            "checks": [{"name": "growth", "cells": 256}],
            "sweep": {"parameter": "checks.0.radii", "values": []},
        }
        # sweep over the radii of the growth check via whole-check replacement
        cfg["sweep"] = {
            "parameter": "checks",
            "values": [
                [{"name": "growth", "cells": 256, "radii": [float(r)]}] for r in (1, 2, 4, 8)
            ],
        }
        reports, table = sweep(cfg)
        assert len(reports) == 4
        ratios = []
        for report, R in zip(reports, (1.0, 2.0, 4.0, 8.0)):
            growth = next(r for r in report.results if r.name == "growth")
            ratios.append(growth.extras["volumes"][0] / (math.pi * R * R))
        assert all(abs(r - 1.0) <= 0.01 for r in ratios)
        assert max(ratios) - min(ratios) <= 0.01

    def test_probe_t_sweep_reports_constants(self):
        cfg = bundled("z2-probe")
        cfg["grid"]["counts"] = [3, 3]
        cfg["probe"]["cells"] = 64
        reports, table = sweep(cfg)
        assert [row["value"] for row in table] == [3, 4, 5]
        for row in table:
            assert row["implied_c4"] is not None and math.isfinite(row["implied_c4"])

    def test_empty_sweep(self):
        cfg = small_z2_config(sweep={"parameter": "probe.t", "values": []})
        reports, table = sweep(cfg)
        assert reports == [] and table == []


class TestCli:
    def run_cli(self, *args):
        proc = subprocess.run(
            [sys.executable, "-m", "curvlab.cli", *args],
            capture_output=True,
            text=True,
        )
        return proc

    def test_exit_code_pass(self):
        proc = self.run_cli("check", "catenoid-kato", "--jobs", "1")
        assert proc.returncode == 0
        assert "overall: pass" in proc.stdout

    def test_exit_code_fail(self, tmp_path):
        cfg = {
            "surface": {"kind": "graph", "exprs": ["x^2 + y^2", "0"], "n": 2},
            "grid": {"ranges": [[-1, 1], [-1, 1]], "counts": [3, 3]},
            "checks": [{"name": "minimality"}],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg))
        proc = self.run_cli("check", str(path), "--jobs", "1")
        assert proc.returncode == 1

    def test_exit_code_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(small_z2_config(checks=[{"name": "nope"}])))
        proc = self.run_cli("check", str(path))
        assert proc.returncode == 2
        assert "checks[0].name" in proc.stderr

    def test_list_commands(self):
        assert "catenoid" in self.run_cli("list-surfaces").stdout
        assert "kato" in self.run_cli("list-checks").stdout

    def test_missing_config(self):
        proc = self.run_cli("check", "does-not-exist")
        assert proc.returncode == 2
