"""The plot command: exit codes and stderr diagnostics."""

import shutil
import subprocess
import sys

import pandas as pd
import pytest

from maxidplots.cli import main

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_happy_path(golden_sim, tmp_path, capsys):
    out = tmp_path / "qq.png"
    assert main(["qq", "--in", str(golden_sim), "--out", str(out)]) == 0
    assert out.read_bytes().startswith(PNG_MAGIC)
    assert "wrote" in capsys.readouterr().out


def test_all_kinds_render(golden_sim, golden_mda, tmp_path):
    jobs = [("qq", golden_sim), ("paths", golden_sim),
            ("mda-curve", golden_mda)]
    for kind, src in jobs:
        out = tmp_path / f"{kind}.png"
        assert main([kind, "--in", str(src), "--out", str(out)]) == 0
        assert out.exists()


def test_schema_error_exits_two(golden_sim, tmp_path, capsys):
    broken = tmp_path / "broken"
    shutil.copytree(golden_sim, broken)
    frame = pd.read_csv(broken / "samples.csv")
    frame.drop(columns=["Z"]).to_csv(broken / "samples.csv", index=False)
    code = main(["qq", "--in", str(broken), "--out", str(tmp_path / "x.png")])
    assert code == 2
    err = capsys.readouterr().err
    assert "samples.csv" in err and "'Z'" in err


def test_missing_directory_exits_two(tmp_path, capsys):
    code = main(["paths", "--in", str(tmp_path / "nowhere"),
                 "--out", str(tmp_path / "x.png")])
    assert code == 2
    assert "paths.csv" in capsys.readouterr().err


def test_unwritable_output_exits_three(golden_sim, tmp_path, capsys):
    out = tmp_path / "no" / "such" / "dir" / "x.png"
    code = main(["qq", "--in", str(golden_sim), "--out", str(out)])
    assert code == 3


def test_unknown_kind_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["violin", "--in", str(tmp_path), "--out", "x.png"])
    assert exc.value.code == 2


def test_module_invocation(golden_sim, tmp_path):
    out = tmp_path / "qq.png"
    proc = subprocess.run(
        [sys.executable, "-m", "maxidplots.cli", "qq",
         "--in", str(golden_sim), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_bytes().startswith(PNG_MAGIC)
