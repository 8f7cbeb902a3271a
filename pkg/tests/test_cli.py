import json

import pytest

from remlab.cli import EXIT_CONFIG, EXIT_HORIZON, EXIT_OK, PRESETS, run
from remlab.io import read_csv


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("REMLAB_OUT_DIR", str(tmp_path / "out"))
    monkeypatch.chdir(tmp_path)
    return tmp_path / "out"


def test_conditions_brox(capsys, out_root):
    assert run(["conditions", "--kernel", "brox", "--r", "1.5"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "(2.53125, 0, 1.75, holds=true)"
    manifest = json.loads((out_root / "conditions_manifest.json").read_text())
    assert manifest["config"]["r"] == 1.5 and "numpy" in manifest["versions"]


def test_conditions_brox_fails_at_1_9(capsys):
    assert run(["conditions", "--kernel", "brox", "--r", "1.9"]) == EXIT_OK
    assert "holds=false" in capsys.readouterr().out


def test_index_zero(capsys, out_root):
    assert run(["index", "--law", "zero", "--d", "1", "--r", "2", "--k", "100"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "n(100)=3"
    assert read_csv(out_root / "index.csv")[1] == [["100", "3"]]


def test_index_horizon_exit(capsys):
    code = run(["index", "--law", "zero", "--r", "2", "--k-grid", "1,1e12", "--n-max", "3"])
    assert code == EXIT_HORIZON
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == EXIT_HORIZON


def test_sample_byte_identical(tmp_path):
    a, b = tmp_path / "a" / "env.csv", tmp_path / "b" / "env.csv"
    assert run(["sample", "--law", "brownian", "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert run(["sample", "--law", "brownian", "--seed", "7", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a" / "env_manifest.json").exists()


def test_energy_writes_report(out_root, capsys):
    assert run(["energy", "--law", "brownian", "--seed", "3", "--k-grid", "1,10,100"]) == EXIT_OK
    assert "violations=0" in capsys.readouterr().out
    header, _ = read_csv(out_root / "indices.csv")
    assert header == ["k", "n_of_k", "lemma33_slack", "lemma34_slack", "cor35_slack"]


def test_config_file_and_flag_precedence(tmp_path, out_root, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"law": "zero", "r": 3.0, "k_grid": [100]}))
    assert run(["index", "--config", str(cfg), "--r", "2"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "n(100)=3"
    manifest = json.loads((out_root / "index_manifest.json").read_text())
    assert manifest["config"]["r"] == 2.0


@pytest.mark.parametrize("argv", [
    ["index", "--law", "nope"],
    ["index", "--r", "0.5"],
    ["index", "--unknown-flag", "1"],
    ["bogus"],
    ["conditions", "--kernel", "nope"],
    ["criterion", "--preset", "brownian-events"],
])
def test_config_errors(argv, capsys):
    assert run(argv) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == EXIT_CONFIG and err["message"]


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"law": "zero", "colour": "red"}))
    assert run(["index", "--config", str(cfg)]) == EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_simulate_and_report(tmp_path, out_root, capsys):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"components": ["bm", "bm"], "start": [3.0, 0.0], "rho": 1.0,
                               "trials": 200, "t_end": 10.0, "dt": 0.1}))
    assert run(["simulate", "--config", str(cfg), "--seed", "1"]) == EXIT_OK
    header, rows = read_csv(out_root / "paths.csv")
    assert header == ["t", "x1", "x2"] and len(rows) == 101
    assert read_csv(out_root / "returns.csv")[0][:3] == ["trials", "returns", "frequency"]
    capsys.readouterr()
    assert run(["report"]) == EXIT_OK
    summary = json.loads((out_root / "report.json").read_text())
    assert summary["paths.csv"]["rows"] == 101


def test_criterion_preset(out_root):
    code = run(["criterion", "--preset", "brox-bm-criterion", "--seed", "2"])
    assert code in (EXIT_OK, EXIT_HORIZON)
    header, rows = read_csv(out_root / "criterion.csv")
    assert header[0] == "k" and len(rows) == len(PRESETS["brox-bm-criterion"]["k_grid"])


def test_levy_preset(capsys):
    assert run(["conditions", "--preset", "compound-poisson-event", "--trials", "5000"]) == EXIT_OK
    assert "positive=true" in capsys.readouterr().out


def test_report_without_outputs(tmp_path, capsys):
    assert run(["report", "--out", str(tmp_path / "missing")]) == EXIT_CONFIG
