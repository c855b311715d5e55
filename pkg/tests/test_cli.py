"""End-to-end tests of the command line interface and its artifacts."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from maxidsim.cli import main

SIM_CFG = {
    "levy": {"sigma": 1.0},
    "mass_function": {"kind": "logistic_bump", "a": 1.0},
    "grid": {"horizon": 0.5, "eval_times": [0.0, 0.25, 0.5]},
    "ppp": {"floor": -4.0},
    "replicates": 20,
    "seed": 11,
}


def write_cfg(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def read_rows(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        return header, [line.rstrip("\n").split(",", len(header) - 1)
                        for line in fh]


class TestSimulate:
    def test_artifacts_and_row_count(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        header, rows = read_rows(os.path.join(out, "samples.csv"))
        assert header == ["replicate", "t", "Z", "error_cert"]
        assert len(rows) == 20 * 3
        reps = {int(r[0]) for r in rows}
        assert reps == set(range(20))
        ts = sorted({float(r[1]) for r in rows})
        assert ts == [0.0, 0.25, 0.5]

        manifest = json.loads(
            (tmp_path / "run" / "manifest.json").read_text()
        )
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 11
        assert manifest["rows"] == 60
        assert manifest["floor_mode"] == "explicit"
        assert manifest["floor_cert"] is None
        assert float(manifest["floor"]) == -4.0
        assert len(manifest["error_certs"]) == 20
        assert float(manifest["max_error_cert"]) >= 0.0
        info = json.loads((tmp_path / "run" / "run_info.json").read_text())
        assert info["parallelism"] == 1
        assert info["wall_clock_seconds"] >= 0.0

    def test_margins_consistent_with_cdf(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        header, rows = read_rows(os.path.join(out, "margins.csv"))
        assert header == ["z", "tail_integral", "cdf"]
        assert len(rows) == 1201
        z = np.array([float(r[0]) for r in rows])
        tail = np.array([float(r[1]) for r in rows])
        cdf = np.array([float(r[2]) for r in rows])
        assert np.all(np.diff(z) > 0)
        assert np.all(np.diff(tail) < 0)
        assert np.allclose(cdf, np.exp(-tail), rtol=1e-12)

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", cfg, "--seed", "99",
                     "--out", out]) == 0
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["simulate", "--config", cfg, "--out", a]) == 0
        assert main(["simulate", "--config", cfg, "--out", b]) == 0
        for name in ("samples.csv", "margins.csv", "manifest.json"):
            assert (open(os.path.join(a, name), "rb").read()
                    == open(os.path.join(b, name), "rb").read())

    def test_parallelism_does_not_change_bytes(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(SIM_CFG, replicates=130))
        a, b = str(tmp_path / "p1"), str(tmp_path / "p2")
        assert main(["simulate", "--config", cfg, "--out", a,
                     "--parallelism", "1"]) == 0
        assert main(["simulate", "--config", cfg, "--out", b,
                     "--parallelism", "2"]) == 0
        for name in ("samples.csv", "manifest.json"):
            assert (open(os.path.join(a, name), "rb").read()
                    == open(os.path.join(b, name), "rb").read())
        info = json.loads((tmp_path / "p2" / "run_info.json").read_text())
        assert info["parallelism"] == 2

    def test_auto_floor_certifies(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(SIM_CFG, ppp={"floor": "auto"},
                                       replicates=10))
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["floor_mode"] == "auto"
        assert float(manifest["floor_cert"]) < 1e-3
        assert float(manifest["floor"]) < 0.0

    def test_emit_paths(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", cfg, "--out", out,
                     "--emit-paths"]) == 0
        header, rows = read_rows(os.path.join(out, "paths.csv"))
        assert header == ["kind", "particle", "t", "value"]
        kinds = {r[0] for r in rows}
        assert kinds == {"particle", "envelope"}
        n_cells = int(round(0.5 / 0.025))
        env = [(float(r[2]), float(r[3])) for r in rows if r[0] == "envelope"]
        assert len(env) == n_cells + 1
        ranks = {int(r[1]) for r in rows if r[0] == "particle"}
        assert ranks == set(range(min(30, len(ranks))))
        # the envelope dominates every listed particle pointwise
        env_at = dict(env)
        for r in rows:
            if r[0] == "particle":
                assert float(r[3]) <= env_at[float(r[2])] + 1e-12


class TestSuiteCommands:
    def test_verify_with_no_suites_passes(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(SIM_CFG, suites=[]))
        out = str(tmp_path / "run")
        assert main(["verify", "--config", cfg, "--out", out]) == 0
        header, rows = read_rows(os.path.join(out, "reports.csv"))
        assert header == ["suite", "name", "method", "statistic", "p_value",
                          "p_adjusted", "expectation", "passed", "n_a",
                          "n_b", "details"]
        assert rows == []
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["command"] == "verify"
        assert manifest["suites"] == []

    def test_mda_custom_ladder_single_row(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(
            SIM_CFG, suites=[{"name": "mda", "n": 250, "ladder": [5]}]
        ))
        out = str(tmp_path / "run")
        assert main(["mda", "--config", cfg, "--out", out]) == 0
        header, rows = read_rows(os.path.join(out, "reports.csv"))
        assert len(rows) == 1
        row = dict(zip(header, rows[0]))
        assert row["suite"] == "mda"
        assert row["name"] == "zeta-5-vs-limit"
        assert row["expectation"] == "info"
        assert row["passed"] == "true"
        assert "n=5" in row["details"]
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["command"] == "mda"
        assert manifest["suites"][0]["passed"] is True
        assert len(manifest["suites"][0]["reports"]) == 1


class TestReportCommand:
    def test_report_on_simulation(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = str(tmp_path / "run")
        main(["simulate", "--config", cfg, "--out", out])
        capsys.readouterr()
        assert main(["report", "--out", out]) == 0
        text = capsys.readouterr().out
        assert "command: simulate" in text
        assert "rows: 60" in text

    def test_report_lists_suite_rows(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, dict(
            SIM_CFG, suites=[{"name": "mda", "n": 250, "ladder": [5]}]
        ))
        out = str(tmp_path / "run")
        main(["mda", "--config", cfg, "--out", out])
        capsys.readouterr()
        assert main(["report", "--out", out]) == 0
        text = capsys.readouterr().out
        assert "[PASS] mda/zeta-5-vs-limit" in text
        assert "all rows passed" in text

    def test_report_flags_failures(self, tmp_path, capsys):
        out = tmp_path / "failed"
        out.mkdir()
        (out / "manifest.json").write_text(
            json.dumps({"command": "verify", "seed": 0, "config_hash": "x"})
        )
        (out / "reports.csv").write_text(
            "suite,name,method,statistic,p_value,p_adjusted,expectation,"
            "passed,n_a,n_b,details\n"
            'marginal,gumbel-t-1,ks1,0.21,0.0001,0.0002,pass,false,1000,0,""\n'
            'marginal,gumbel-t-2,ks1,0.01,0.5,0.5,pass,true,1000,0,""\n'
        )
        assert main(["report", "--out", str(out)]) == 1
        text = capsys.readouterr().out
        assert "[FAIL] marginal/gumbel-t-1" in text
        assert "[PASS] marginal/gumbel-t-2" in text
        assert "1 row(s) failed" in text

    def test_report_missing_manifest(self, tmp_path):
        assert main(["report", "--out", str(tmp_path / "nowhere")]) == 2


class TestExitCodes:
    def test_missing_config_file(self, tmp_path):
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", str(tmp_path / "no.json"),
                     "--out", out]) == 2
        assert not os.path.exists(out)

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{broken")
        assert main(["simulate", "--config", str(p),
                     "--out", str(tmp_path / "run")]) == 2

    def test_schema_violation(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(SIM_CFG, levy={"sigma": -1.0}))
        assert main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "run")]) == 2

    def test_runtime_failure_is_three(self, tmp_path):
        # a floor far above the whole system leaves zero particles
        cfg = write_cfg(tmp_path, dict(SIM_CFG, ppp={"floor": 40.0}))
        assert main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "run")]) == 3

    def test_invalid_parallelism_flag(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        assert main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "run"),
                     "--parallelism", "0"]) == 2


class TestConsoleEntry:
    def test_module_invocation(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = str(tmp_path / "run")
        proc = subprocess.run(
            [sys.executable, "-m", "maxidsim.cli", "simulate",
             "--config", cfg, "--out", out],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        rep = subprocess.run(
            [sys.executable, "-m", "maxidsim.cli", "report", "--out", out],
            capture_output=True, text=True,
        )
        assert rep.returncode == 0
        assert "command: simulate" in rep.stdout
