import json
import subprocess
import sys

import pytest

from uqvertex.cli import SCHEMA_VERSION, main
from uqvertex.qarith import scalar


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_smatrix_json(capsys):
    code, out, err = _run(capsys, "smatrix", "-n", "1", "-l", "1", "-m", "2", "-q", "1/2", "-z", "1/5")
    assert code == 0
    data = json.loads(out)
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["stochasticity"]["sum_to_one"]
    assert "stochasticity" in err


def test_smatrix_columns_sum_to_one(capsys):
    code, out, _ = _run(capsys, "smatrix", "-n", "2", "-l", "1", "-m", "1", "-q", "1/2", "-z", "3")
    data = json.loads(out)
    sums = {}
    for e in data["entries"]:
        key = e["col"]
        sums[key] = sums.get(key, scalar(0)) + scalar(f"{e['num']}/{e['den']}")
    assert sums and all(v == 1 for v in sums.values())


def test_smatrix_float_and_csv(capsys):
    code, out, _ = _run(capsys, "smatrix", "-q", "1/2", "-z", "inf", "--format", "csv")
    assert code == 0 and out.count("\n") >= 2
    code, out, _ = _run(capsys, "smatrix", "-q", "1/2", "-z", "3", "--mode", "float")
    assert code == 0
    assert all("value" in e for e in json.loads(out)["entries"])


def test_singular_point_exits_with_two(capsys):
    code, _, err = _run(capsys, "smatrix", "-n", "1", "-l", "1", "-m", "1", "-q", "1/2", "-z", "1/4")
    assert code == 2
    assert "error" in err


def test_bad_rational_exits_with_two(capsys):
    code, _, _ = _run(capsys, "smatrix", "-q", "0.5x", "-z", "2")
    assert code == 2


def test_unknown_suite(capsys):
    code, _, err = _run(capsys, "check", "nope")
    assert code == 2 and "unknown suite" in err


def test_check_suite_passes(capsys):
    code, out, _ = _run(capsys, "check", "bpcp")
    assert code == 0
    assert json.loads(out)["status"] == "pass"


def test_check_with_explicit_parameters(capsys):
    code, out, _ = _run(capsys, "check", "major", "-L", "2", "-n", "1", "-l", "1", "-m", "1,2")
    assert code == 0
    assert json.loads(out)["count"] > 0


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 1, "l": 1, "m": [2], "q": "1/2", "z": ["1/5"]}))
    code, out, _ = _run(capsys, "smatrix", "--config", str(cfg))
    assert code == 0 and json.loads(out)["params"]["z"] == "1/5"
    code, out, _ = _run(capsys, "smatrix", "--config", str(cfg), "-z", "1/7")
    assert code == 0 and json.loads(out)["params"]["z"] == "1/7"


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    code, _, err = _run(capsys, "smatrix", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    code, out, _ = _run(capsys, "appendix", "-o", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["status"] == "pass"


def test_simulate_is_reproducible(capsys):
    argv = ("simulate", "--replications", "2000", "--seed", "42", "--steps", "2")
    code1, out1, _ = _run(capsys, *argv)
    code2, out2, _ = _run(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2
    data = json.loads(out1)
    assert data["forward"]["exact"] == data["reverse"]["exact"]


def test_simulate_needs_configurations_off_default_size(capsys):
    code, _, err = _run(capsys, "simulate", "-L", "4", "--replications", "10")
    assert code == 2


def test_simulate_vertex(capsys):
    code, out, _ = _run(capsys, "simulate", "--model", "vertex", "-n", "1", "-m", "2,2",
                        "--eta", "[[1,1],[0,2]]", "--xi", "[[0,2],[2,0]]", "--replications", "3000",
                        "--steps", "1")
    data = json.loads(out)
    assert code == 0, data
    assert data["forward"]["exact"] is not None


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "uqvertex", "smatrix", "-q", "1/2", "-z", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "smatrix"


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in ("smatrix", "check", "appendix", "simulate"):
        assert name in out
