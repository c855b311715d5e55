"""Golden artifact fixtures, produced by driving the simulator's CLI as a
subprocess. The figure package touches only the files it leaves behind."""

import json
import subprocess
import sys

import pytest

SIM_CFG = {
    "levy": {"sigma": 1.0},
    "mass_function": {"kind": "constant", "c": 1.0},
    "grid": {"horizon": 1.0, "eval_times": [0.0, 0.5, 1.0]},
    "ppp": {"floor": -6.0},
    "replicates": 400,
    "seed": 404,
}

MDA_CFG = {
    "levy": {"sigma": 1.0},
    "mass_function": {"kind": "logistic_bump", "a": 1.0},
    "grid": {"horizon": 1.0, "eval_times": [0.5, 1.0]},
    "ppp": {"floor": -6.0},
    "replicates": 10,
    "seed": 405,
    "suites": [{"name": "mda", "n": 300, "ladder": [1, 10]}],
}


def run_simulator(subcommand, cfg, out_dir, extra=()):
    cfg_path = out_dir.parent / f"{out_dir.name}-cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    proc = subprocess.run(
        [sys.executable, "-m", "maxidsim.cli", subcommand,
         "--config", str(cfg_path), "--out", str(out_dir), *extra],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out_dir


@pytest.fixture(scope="session")
def golden_sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden") / "sim"
    return run_simulator("simulate", SIM_CFG, out, extra=["--emit-paths"])


@pytest.fixture(scope="session")
def golden_mda(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden") / "mda"
    return run_simulator("mda", MDA_CFG, out)
