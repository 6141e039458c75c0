import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cs_variational import cli
from cs_variational.cli import main, parse_grid
from cs_variational.core import Instance, NumericError
from cs_variational.harness import CSV_HEADER


def test_parse_grid():
    assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert parse_grid("0.05:0.4:0.05")[-1] == 0.4 and len(parse_grid("0.05:0.4:0.05")) == 8
    assert parse_grid("0.2, 0.5,0.9") == [0.2, 0.5, 0.9]
    for bad in ("a:b:c", "0.1:0.5:0", "0.5:0.1:0.1", "x,y"):
        with pytest.raises(cli.UsageError):
            parse_grid(bad)


def test_gen_round_trips(tmp_path):
    out = tmp_path / "inst.json"
    assert main(["gen", "--n", "64", "--m", "32", "--rho", "0.1", "--delta0", "1e-8",
                 "--seed", "7", "--out", str(out)]) == 0
    inst = Instance.from_json(out.read_text())
    assert (inst.n, inst.m, inst.prior.rho, inst.delta0, inst.seed) == (64, 32, 0.1, 1e-8, 7)
    assert inst.to_json() + "\n" == out.read_text()


def test_gen_to_stdout(capsys):
    assert main(["gen", "--n", "4", "--m", "2", "--rho", "0.5"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 4


def test_solve_bethe_min_recovers_the_signal(tmp_path):
    inst = tmp_path / "inst.json"
    rep = tmp_path / "rep.json"
    main(["gen", "--n", "512", "--m", "256", "--rho", "0.1", "--delta0", "1e-8", "--seed", "7",
          "--out", str(inst)])
    assert main(["solve", "--algo", "bethe-min", "--instance", str(inst), "--out", str(rep)]) == 0
    report = json.loads(rep.read_text())
    assert report["mse_final"] <= 1e-6
    assert "energy_trace" not in report and len(report["a_final"]) == 512


def test_solve_with_trace(tmp_path):
    inst = tmp_path / "inst.json"
    rep = tmp_path / "rep.json"
    main(["gen", "--n", "64", "--m", "40", "--rho", "0.1", "--delta0", "1e-4", "--out", str(inst)])
    assert main(["solve", "--algo", "mf-learn", "--instance", str(inst), "--trace", "--max-iter",
                 "30", "--out", str(rep)]) == 0
    report = json.loads(rep.read_text())
    assert len(report["energy_trace"]) == report["iterations"] == len(report["delta_trace"])


def test_sweep_writes_one_row_per_cell(tmp_path):
    out = tmp_path / "grid.csv"
    assert main(["sweep", "--rho", "0.05:0.15:0.05", "--alpha", "0.3,0.6", "--n", "32",
                 "--trials", "2", "--algo", "amp", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 1 + 3 * 2


def test_usage_errors_exit_one(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "missing.json")]) == 1
    assert main(["gen", "--n", "4"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["gen", "--n", "0", "--m", "2", "--rho", "0.1"]) == 1
    assert main(["sweep", "--rho", "0.1", "--alpha", "1.5"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--instance", str(bad)]) == 1
    assert main(["solve", "--instance", str(bad), "--damping", "1.5"]) == 1


def test_numeric_failure_exits_two(tmp_path, monkeypatch):
    inst = tmp_path / "inst.json"
    main(["gen", "--n", "16", "--m", "8", "--rho", "0.1", "--out", str(inst)])

    def boom(*args, **kwargs):
        raise NumericError("synthetic failure", where="iteration 3")

    monkeypatch.setattr(cli, "solve", boom)
    assert main(["solve", "--instance", str(inst)]) == 2


def test_check_command(tmp_path):
    out = tmp_path / "check.txt"
    assert main(["check", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_module_entry_point():
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "cs_variational", "--help"], capture_output=True,
                          text=True, env=env, timeout=120)
    assert proc.returncode == 0
    for command in ("gen", "solve", "sweep", "check"):
        assert command in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "cs_variational", "solve"], capture_output=True,
                          text=True, env=env, timeout=120)
    assert proc.returncode == 1


def test_random_init_is_seeded(tmp_path):
    inst = tmp_path / "inst.json"
    main(["gen", "--n", "64", "--m", "40", "--rho", "0.2", "--out", str(inst)])
    outs = []
    for seed in ("1", "1", "2"):
        path = tmp_path / f"r{len(outs)}.json"
        main(["solve", "--instance", str(inst), "--init", "random", "--seed", seed,
              "--max-iter", "1", "--out", str(path)])
        outs.append(np.array(json.loads(path.read_text())["a_final"]))
    assert np.array_equal(outs[0], outs[1]) and not np.array_equal(outs[0], outs[2])
