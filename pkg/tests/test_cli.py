import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rmig import cli
from rmig.errors import UsageError

GUE_MODEL = {
    "base": [0.0],
    "perturbations": [[0.0, 1.0], [0.0, 0.0, 1.0]],
    "theta_box": [[-2.0, 2.0], [0.05, 4.0]],
    "n": 3,
    "support": "full",
}


def base_config(**overrides):
    doc = {
        "command": "metric",
        "model": dict(GUE_MODEL),
        "theta": [0.0, 0.5],
        "method": "exact",
        "output": "json",
    }
    doc.update(overrides)
    return doc


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "rmig", *args],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


class TestValidation:
    def test_defaults_materialized(self):
        cfg = cli.validate_config(base_config(
            method="mcmc", sampler={"seed": 9, "steps": 1000}))
        assert cfg.sampler.chains == 4
        assert cfg.sampler.resolved_burn_in == 200
        assert cfg.sampler.proposal_scale == 0.5

    def test_unknown_top_key_rejected(self):
        with pytest.raises(UsageError, match="unknown config keys"):
            cli.validate_config(base_config(bogus=1))

    def test_unknown_sampler_key_rejected(self):
        with pytest.raises(UsageError, match="unknown sampler keys"):
            cli.validate_config(base_config(
                method="mcmc", sampler={"seed": 1, "walkers": 7}))

    def test_theta_outside_box_names_coordinate(self):
        with pytest.raises(UsageError, match=r"theta\[1\]"):
            cli.validate_config(base_config(theta=[0.0, 9.0]))

    def test_negative_n_rejected(self):
        model = dict(GUE_MODEL)
        model["n"] = -2
        with pytest.raises(UsageError):
            cli.validate_config(base_config(model=model))

    def test_seed_mandatory_for_mcmc(self):
        with pytest.raises(UsageError, match="seed is mandatory"):
            cli.validate_config(base_config(method="mcmc"))

    def test_unknown_command(self):
        with pytest.raises(UsageError, match="command"):
            cli.validate_config(base_config(command="frobnicate"))

    def test_compose_requires_models(self):
        with pytest.raises(UsageError, match="models"):
            cli.validate_config({"command": "compose", "theta": []})


class TestRun:
    def test_metric_both_with_agreement_flags(self):
        cfg = cli.validate_config(base_config(
            method="both", sampler={"seed": 42, "steps": 3000}))
        code, report = cli.run(cfg)
        assert code == 0
        payload = report["body"]["metric"]
        assert np.allclose(payload["exact"], [[1.0, 0.0], [0.0, 2.0]],
                           atol=1e-6)
        assert all(all(row) for row in payload["agree"])

    def test_equilibrium_report(self):
        cfg = cli.validate_config(base_config(command="equilibrium"))
        code, report = cli.run(cfg)
        body = report["body"]["equilibrium"]
        assert body["a"] == pytest.approx(-2.0, abs=1e-9)
        assert body["b"] == pytest.approx(2.0, abs=1e-9)
        assert body["residual"] < 1e-6

    def test_pressure_reports_both_conventions(self):
        cfg = cli.validate_config(base_config(command="pressure"))
        code, report = cli.run(cfg)
        vals = report["body"]["pressure"]
        assert set(vals) == {"eigenvalue", "matrix"}
        assert vals["matrix"] == pytest.approx(
            0.5 * math.log(math.pi / 1.5), abs=1e-9)

    def test_report_embeds_config_and_hash(self):
        cfg = cli.validate_config(base_config(command="pressure"))
        _, report = cli.run(cfg)
        assert report["body"]["config"]["command"] == "pressure"
        assert len(report["meta"]["content_hash"]) == 64


class TestProcess:
    def test_exit_zero_and_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        out = tmp_path / "report.json"
        path.write_text(json.dumps(base_config(command="pressure")))
        code, stdout, stderr = run_cli(["--config", str(path), "--out",
                                        str(out)])
        assert code == 0, stderr
        report = json.loads(out.read_text())
        assert "pressure" in report["body"]

    def test_missing_seed_exit_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(method="mcmc")))
        code, _, stderr = run_cli(["--config", str(path)])
        assert code == 2
        assert "seed" in stderr

    def test_unknown_key_exit_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        doc = base_config()
        doc["mystery"] = 1
        path.write_text(json.dumps(doc))
        code, _, stderr = run_cli(["--config", str(path)])
        assert code == 2

    def test_solver_failure_exit_3(self, tmp_path):
        # double-well base: outside the one-cut regime
        model = {"base": [0.0, 0.0, -3.0, 0.0, 1.0], "perturbations": [],
                 "theta_box": [], "n": 3, "support": "full"}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(command="equilibrium",
                                               model=model, theta=[])))
        code, _, stderr = run_cli(["--config", str(path)])
        assert code == 3
        assert "one-cut" in stderr

    def test_unreadable_config_exit_4(self):
        code, _, _ = run_cli(["--config", "/nonexistent/cfg.json"])
        assert code == 4

    def test_dotted_override_changes_sampler(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(
            method="mcmc", sampler={"seed": 5, "steps": 1000})))
        out = tmp_path / "r.json"
        code, _, stderr = run_cli(["--config", str(path), "--out", str(out),
                                   "--sampler.steps=500", "--output", "json"])
        assert code == 0, stderr
        report = json.loads(out.read_text())
        assert report["body"]["config"]["sampler"]["steps"] == 500

    def test_csv_output(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(command="pressure",
                                               output="csv")))
        code, stdout, _ = run_cli(["--config", str(path)])
        assert code == 0
        lines = stdout.splitlines()
        assert lines[0] == "field,value"
        assert any(line.startswith("pressure.matrix,") for line in lines)

    def test_command_positional_overrides_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(command="metric")))
        code, stdout, _ = run_cli(["pressure", "--config", str(path),
                                   "--output", "json", "--out", "/dev/stdout"])
        assert code == 0
        assert "pressure" in json.loads(stdout)["body"]


class TestReproducibility:
    def test_byte_identical_bodies_across_runs_and_workers(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(
            method="both", output="json",
            sampler={"seed": 31, "steps": 1500})))
        bodies = []
        for run_idx, workers in ((0, "1"), (1, "1"), (2, "4")):
            out = tmp_path / f"r{run_idx}.json"
            code, _, stderr = run_cli(["--config", str(path), "--out",
                                       str(out), "--workers", workers])
            assert code == 0, stderr
            report = json.loads(out.read_text())
            bodies.append((json.dumps(report["body"], sort_keys=True),
                           report["meta"]["content_hash"]))
        assert bodies[0] == bodies[1] == bodies[2]

    def test_compose_command(self, tmp_path):
        doc = {
            "command": "compose",
            "models": [dict(GUE_MODEL), dict(GUE_MODEL)],
            "theta": [0.0, 0.5, 0.0, 0.5],
            "method": "both",
            "sampler": {"seed": 17, "steps": 1500},
            "output": "json",
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "r.json"
        code, _, stderr = run_cli(["--config", str(path), "--out", str(out)])
        assert code == 0, stderr
        body = json.loads(out.read_text())["body"]["compose"]
        exact_metric = np.asarray(body["metric_exact"])
        assert np.allclose(exact_metric[:2, 2:], 0.0)
        assert body["max_cross_block"] < 0.5
