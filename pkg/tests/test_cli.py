import csv
import hashlib
import json
import subprocess
import sys

import pytest

from dccarbon.cli import main

SMALL = ["--slots", "600", "--train-slots", "300"]


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_generate_is_reproducible(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["generate", "--seed", "4", "--slots", "50", "--out", str(tmp_path / name)]) == 0
    assert sha(tmp_path / "a.csv") == sha(tmp_path / "b.csv")
    main(["generate", "--seed", "5", "--slots", "50", "--out", str(tmp_path / "c.csv")])
    assert sha(tmp_path / "a.csv") != sha(tmp_path / "c.csv")


def test_generate_default_length(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["generate", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert len(rows) == 10_001 and rows[0][0] == "t" and rows[-1][0] == "9999"


def test_generate_zero_slots_is_an_error(tmp_path, capsys):
    assert main(["generate", "--slots", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_init_writes_editable_defaults(tmp_path):
    assert main(["init", "--out", str(tmp_path)]) == 0
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["emission_cap_tCO2_per_slot"] == 1.2
    spec = str(tmp_path / "scenario.json")
    assert main(["generate", "--spec", spec, "--slots", "5", "--out", str(tmp_path / "s.csv")]) == 0


def test_pipeline_and_byte_identical_reruns(tmp_path):
    data = tmp_path / "data.csv"
    main(["generate", "--seed", "0", "--slots", "600", "--out", str(data)])
    common = ["--data", str(data), "--train-slots", "300"]
    digests = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["tune", *common, "--history", str(d / "h.csv"), "--out", str(d / "p.json")]) == 0
        assert main(["run", *common, "--params", str(d / "p.json"), "--out", str(d / "r")]) == 0
        digests.append([sha(d / "p.json"), sha(d / "h.csv"), sha(d / "r" / "trace.csv"),
                        sha(d / "r" / "report.json")])
    assert digests[0] == digests[1]
    doc = json.loads((tmp_path / "run0" / "p.json").read_text())
    assert doc["converged"] and doc["bounds"] is not None
    rows = list(csv.reader(open(tmp_path / "run0" / "r" / "trace.csv")))
    assert len(rows) == 301


def test_in_memory_data_matches_file(tmp_path):
    data = tmp_path / "data.csv"
    main(["generate", "--seed", "2", "--slots", "600", "--out", str(data)])
    main(["tune", "--data", str(data), "--train-slots", "300", "--out", str(tmp_path / "a.json")])
    main(["tune", "--seed", "2", *SMALL, "--out", str(tmp_path / "b.json")])
    assert sha(tmp_path / "a.json") == sha(tmp_path / "b.json")


def test_loose_cap_tunes_to_zero_queue(tmp_path, capsys):
    assert main(["tune", *SMALL, "--emission-cap", "50", "--out", str(tmp_path / "p.json")]) == 0
    doc = json.loads((tmp_path / "p.json").read_text())
    assert doc["params"]["emission_queue_cap"] == 0.0 and doc["iterations"] == 1
    assert "converged after 1 iterations" in capsys.readouterr().out


def test_compare_and_sweep(tmp_path):
    p = tmp_path / "p.json"
    main(["tune", *SMALL, "--out", str(p)])
    out = tmp_path / "cmp"
    assert main(["compare", *SMALL, "--params", str(p), "--variants", "proposed,c4,c5",
                 "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "comparison.csv")))
    assert [r[0] for r in rows[1:]] == ["proposed", "c4", "c5"]
    assert json.loads((out / "comparison.json").read_text())[0]["variant"] == "proposed"
    sw = tmp_path / "sw.csv"
    assert main(["sweep", *SMALL, "--axis", "qe", "--values", "10,20", "--out", str(sw)]) == 0
    rows = list(csv.reader(open(sw)))
    assert [r[1] for r in rows[1:]] == ["ok", "ok"]


@pytest.mark.parametrize("argv,message", [
    (["run", *SMALL, "--out", "x"], "needs --params"),
    (["run", *SMALL, "--variant", "c9", "--out", "x"], "unknown variant"),
    (["tune", "--slots", "100", "--train-slots", "100", "--out", "x.json"], "--train-slots"),
    (["tune", "--data", "missing.csv", "--out", "x.json"], "missing.csv"),
    (["tune", *SMALL, "--config", "nope.json", "--out", "x.json"], "nope.json"),
])
def test_user_errors_exit_two(tmp_path, monkeypatch, capsys, argv, message):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and message in err


def test_infeasible_config_reports_tuning_failure(tmp_path, capsys):
    main(["init", "--out", str(tmp_path)])
    cfg = json.loads((tmp_path / "config.json").read_text())
    cfg["temp_max_degC"] = [t + 1.0 for t in cfg["temp_min_degC"]]
    (tmp_path / "config.json").write_text(json.dumps(cfg))
    assert main(["tune", *SMALL, "--config", str(tmp_path / "config.json"),
                 "--out", str(tmp_path / "p.json")]) == 2
    assert "no feasible strategy parameters" in capsys.readouterr().err


def test_check_command(capsys):
    assert main(["check", *SMALL]) == 0
    assert "assumptions hold" in capsys.readouterr().out


def test_module_help_runs():
    res = subprocess.run([sys.executable, "-m", "dccarbon", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("generate", "tune", "run", "compare", "sweep"):
        assert cmd in res.stdout
