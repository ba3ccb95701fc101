import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from chronocalc import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _cfg(tmp_path, **over):
    cfg = {"name": "trot", "op": "trotter", "params": {"t": 1.0},
           "sweep": {"param": "n", "values": [2, 4, 8, 16, 32]}, "seed": 0}
    cfg.update(over)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    return p


def test_run_writes_csv_with_slope(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["run", str(_cfg(tmp_path)), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(cli.RUN_HEADER)
    slope_rows = [l for l in lines if ",slope," in l]
    assert len(slope_rows) == 1
    assert abs(float(slope_rows[0].split(",")[3]) + 1) <= 0.1
    assert "\r" not in out.read_text()


def test_run_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    c = _cfg(tmp_path, op="gtk", family={"kind": "random_smooth", "dim": 2, "seed": 3},
             family_b={"kind": "random_smooth", "dim": 2, "seed": 4})
    assert cli.main(["run", str(c), "--out", str(a)]) == 0
    assert cli.main(["run", str(c), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_empty_sweep(tmp_path, capsys):
    c = _cfg(tmp_path, sweep={"param": "n", "values": []})
    assert cli.main(["run", str(c)]) == 1
    assert "sweep values nonempty" in capsys.readouterr().err


def test_bad_json_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "name": "x",\n  "op": \n}')
    assert cli.main(["run", str(p)]) == 1
    err = capsys.readouterr().err
    assert "line 4" in err and "column" in err


def test_schema_violation_names_field(tmp_path, capsys):
    c = _cfg(tmp_path, op="nonsense")
    assert cli.main(["run", str(c)]) == 1
    assert "field op" in capsys.readouterr().err


def test_expect_failure_gives_exit_2(tmp_path):
    c = _cfg(tmp_path, expect={"slope": -3.0, "slope_tol": 0.1})
    assert cli.main(["run", str(c), "--out", str(tmp_path / "o.csv")]) == 2


def test_missing_family_is_error(tmp_path):
    c = _cfg(tmp_path, op="propagate")
    assert cli.main(["run", str(c), "--out", str(tmp_path / "o.csv")]) == 1


@pytest.mark.parametrize("name", ["trotter", "gtk", "dyson", "mild", "pathsum_lambda"])
def test_shipped_configs(tmp_path, monkeypatch, name):
    shutil.copy(CONFIGS / f"{name}.json", tmp_path / "c.json")
    monkeypatch.chdir(tmp_path)
    assert cli.main(["run", "c.json"]) == 0
    assert list(tmp_path.glob("out/*.csv"))


def test_suite_gauge(tmp_path, capsys):
    assert cli.main(["suite", "gauge", "--out", str(tmp_path)]) == 0
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert doc["passed"] is True and [c["id"] for c in doc["criteria"]] == [1, 2]
    assert "[PASS] criterion  1" in captured.err
    assert (tmp_path / "suite_gauge.csv").read_text().startswith(",".join(cli.SUITE_HEADER))
    assert json.loads((tmp_path / "suite_gauge.json").read_text()) == doc


def test_suite_tolerance_failure_and_unknown(capsys):
    assert cli.main(["suite", "gauge", "--tol-scale", "0"]) == 2
    assert cli.main(["suite", "nope"]) == 1
    assert "unknown suite" in capsys.readouterr().err


def test_plot_kinds(tmp_path):
    out = tmp_path / "r.csv"
    cli.main(["run", str(_cfg(tmp_path)), "--out", str(out)])
    svg = tmp_path / "r.svg"
    assert cli.main(["plot", str(out), "-o", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "slope -1.0" in text
    assert cli.main(["plot", str(out), "--kind", "line", "-o", str(tmp_path / "l.svg")]) == 0
    k = tmp_path / "k.csv"
    k.write_text("x,y,t,re,im\n0,0,1,1,0\n1,0,1,0,1\n0,1,1,0,0\n1,1,1,2,0\n")
    assert cli.main(["plot", str(k), "--kind", "heatmap", "-o", str(tmp_path / "h.svg")]) == 0
    assert "rgb(" in (tmp_path / "h.svg").read_text()
    again = tmp_path / "r2.svg"
    cli.main(["plot", str(out), "-o", str(again)])
    assert again.read_bytes() == svg.read_bytes()


def test_plot_errors(tmp_path):
    e = tmp_path / "e.csv"
    e.write_text("a,b\n")
    assert cli.main(["plot", str(e)]) == 1
    assert cli.main(["plot", str(tmp_path / "missing.csv")]) == 1
    k = tmp_path / "k.csv"
    k.write_text("x,y,t,re,im\n0,0,1,1,0\n1,0,1,0,1\n0,1,1,0,0\n")
    assert cli.main(["plot", str(k), "--kind", "heatmap"]) == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "chronocalc", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "suite" in r.stdout
