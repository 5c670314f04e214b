import json
import subprocess
import sys

import pytest

from arnpg.cli import main


def test_gen_run_slope(tmp_path, capsys):
    mdp = tmp_path / "m.json"
    assert main(["gen-mdp", "--states", "5", "--actions", "3", "--objectives", "2",
                 "--gamma", "0.8", "--seed", "2", "-o", str(mdp)]) == 0
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mdp": {"file": "m.json"}, "criterion": {"kind": "cmdp", "b": [2.5]},
                               "algorithm": "EPD",
                               "hyperparameters": {"alpha": 0.2, "eta": 1.0, "eta_prime": 1.0,
                                                   "K": 200}}))
    assert main(["run", "--config", str(cfg), "-o", str(tmp_path / "o.csv")]) == 0
    assert main(["slope", "--input", str(tmp_path / "o.csv"), "--column", "V_1",
                 "--from", "10", "--to", "200"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("slope=")


def test_oracle_subcommand(tmp_path, capsys):
    mdp = tmp_path / "m.json"
    main(["gen-mdp", "--states", "4", "--actions", "2", "--objectives", "2", "--gamma", "0.8",
          "--seed", "0", "-o", str(mdp)])
    capsys.readouterr()
    for crit, extra in (("cmdp", ["--b", "2.0"]), ("maxmin", ["--c", "1", "1"]), ("smooth", [])):
        assert main(["oracle", "--mdp", str(mdp), "--criterion", crit] + extra) == 0
        doc = json.loads(capsys.readouterr().out)
        assert "value" in doc
    assert main(["oracle", "--mdp", str(mdp), "--criterion", "cmdp", "--b", "9"]) == 1


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"algorithm": "EPD"}))
    assert main(["run", "--config", str(bad), "-o", str(tmp_path / "x.csv")]) != 0
    err = capsys.readouterr().err
    assert "mdp" in err
    assert main(["run", "--config", str(tmp_path / "missing.json"), "-o", "x.csv"]) != 0
    (tmp_path / "e.csv").write_text("seed,k,T,avg_gap\r\n")
    assert main(["slope", "--input", str(tmp_path / "e.csv"), "--column", "avg_gap"]) != 0
    assert main(["slope", "--input", str(tmp_path / "e.csv"), "--column", "nope"]) != 0


def test_check_subcommand(capsys):
    assert main(["check"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 8 and all(l.startswith("PASS") for l in lines)


def test_console_script_usage():
    r = subprocess.run([sys.executable, "-m", "arnpg.cli", "frobnicate"], capture_output=True,
                       text=True)
    assert r.returncode != 0 and "invalid choice" in r.stderr
