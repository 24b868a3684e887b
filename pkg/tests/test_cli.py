import csv
import io
import json
import math

import pytest

from stablegap import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_constants_json(capsys):
    code, out, _ = run(capsys, "constants", "--alpha", "1")
    rep = json.loads(out)
    assert code == 0 and rep["schema_version"] == cli.SCHEMA_VERSION and rep["command"] == "constants"
    assert "config" in rep and "seconds" in rep and "version" in rep


def test_constants_csv(capsys):
    code, out, _ = run(capsys, "constants", "--alpha", "0.5", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows


def test_kernel_green_and_density(capsys):
    code, out, _ = run(capsys, "kernel", "density", "--alpha", "1", "--x", "1,0")
    value = json.loads(out)["result"]["density"]["value"]
    assert code == 0 and value == pytest.approx(1 / (2 * math.pi * 2**1.5), rel=1e-9)
    code, out, _ = run(capsys, "kernel", "green", "--alpha", "1", "--z", "0,0", "--y", "0.5,0")
    assert code == 0 and json.loads(out)["passed"] is not False


def test_gap_writes_out_file(capsys, tmp_path):
    path = tmp_path / "gap.json"
    code, _, _ = run(capsys, "--out", str(path), "gap", "--alpha", "1", "--domain", "rect:1,0.5",
                     "--h", "0.125")
    rep = json.loads(path.read_text())
    assert code == 0 and rep["result"]
    text = json.dumps(rep)
    assert "NaN" not in text and "Infinity" not in text


def test_config_file_supplies_alpha(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\nalpha = 1.2\n[gap]\nh = 0.125\nk = 3\n")
    code, out, _ = run(capsys, "--config", str(cfg), "gap")
    rep = json.loads(out)
    assert code == 0 and rep["config"]["alpha"] == 1.2 and rep["config"]["h"] == 0.125
    # explicit flags win over the file
    code, out, _ = run(capsys, "--config", str(cfg), "gap", "--alpha", "0.8")
    assert json.loads(out)["config"]["alpha"] == 0.8


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[gap]\nalpah = 1.0\n")
    code, _, err = run(capsys, "--config", str(cfg), "gap")
    assert code == cli.EXIT_USAGE and "alpah" in err


@pytest.mark.parametrize("argv", [
    ("constants", "--alpha", "2.5"),
    ("gap", "--alpha", "1", "--h", "0.9"),
    ("gap",),
    ("--config", "/nonexistent.ini", "gap"),
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == cli.EXIT_USAGE


def test_bad_command_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["nope"])
    assert exc.value.code == 2


def test_numerical_failure_exit_code(capsys):
    code, _, err = run(capsys, "mc", "exittime", "--alpha", "1", "--n", "10", "--dt", "1e-9",
                       "--step-cap", "2")
    assert code == cli.EXIT_NUMERICAL and "numerical failure" in err


def test_lemmas_and_cf(capsys):
    code, out, _ = run(capsys, "lemmas", "--n", "200", "--seed", "1")
    assert code == 0 and json.loads(out)["passed"] is True
    code, out, _ = run(capsys, "mc", "cf", "--alpha", "1.5", "--n", "50000")
    assert code == 0 and json.loads(out)["passed"] is True


def test_verify_quick(capsys):
    code, out, _ = run(capsys, "verify", "all", "--quick")
    assert code == 0 and json.loads(out)["passed"] is True


def test_table_csv_with_meta(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, _, _ = run(capsys, "--out", str(path), "table", "--sweep", "alphas=1", "ratios=1,2",
                     "--h", "0.125")
    rows = list(csv.DictReader(path.open()))
    assert code in (0, 1) and len(rows) == 2
    meta = json.loads((tmp_path / "t.meta.json").read_text())
    assert meta["command"] == "table"
    assert all(math.isfinite(float(r["gap"])) for r in rows)
