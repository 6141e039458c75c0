"""Acceptance criteria, one test (and one PASS/FAIL line) per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the "acceptance criteria" section of the terminal summary.
"""
import os
import time

import numpy as np
import pytest

from cs_variational import checks
from cs_variational.cli import main as cli_main
from cs_variational.harness import SweepSpec, run_sweep, region_contains, success_grid
from cs_variational.solvers import SolverConfig

CELL_N = 512
CELL_SEEDS = 20
CELL_DELTA0 = 1e-8


def test_denoiser_matches_quadrature(criterion):
    t0 = time.perf_counter()
    res = checks.check_denoiser_quadrature(points=20, limit=1e-10)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 10.0
    criterion("denoiser vs adaptive quadrature, 20^3 grid, rel <= 1e-10, < 10 s", ok,
              f"worst rel err {res.worst:.2e} {res.detail}; {elapsed:.1f}s")
    assert ok


def test_logz_identities(criterion):
    res = checks.check_identities(n_points=1000, limit=1e-5)
    criterion("d log Z identities vs finite differences, 10^3 points, rel <= 1e-5", res.passed,
              f"worst rel err {res.worst:.2e} {res.detail}")
    assert res.passed


def test_energy_gradients(criterion):
    res = checks.check_energy_gradients(n_points=20, n=8, m=4, limit=1e-5)
    criterion("mf/bethe gradients vs central differences, 20 points, N=8 M=4, rel <= 1e-5",
              res.passed, f"worst rel err {res.worst:.2e}")
    assert res.passed


def test_bound_chain(criterion):
    res = checks.check_bound_chain(n_points=10_000, slack=1e-12)
    criterion("bound chain (M/2)log(2 pi delta) <= Bethe <= MF, 10^4 points, slack 1e-12",
              res.passed, res.detail)
    assert res.passed


def test_parallel_mf_equals_ist(criterion):
    res = checks.check_mf_ist(seeds=20, iters=50, limit=1e-12)
    criterion("parallel MF == IST, 50 iterations, 20 seeds, dev <= 1e-12", res.passed,
              f"max deviation {res.worst:.2e}")
    assert res.passed


def test_amp_fixed_points_are_bethe_stationary(criterion):
    res = checks.check_amp_bethe(runs=20, limit=1e-6)
    criterion("20 converged AMP runs: scaled Bethe gradient <= 1e-6", res.passed,
              f"worst {res.worst:.2e} {res.detail}")
    assert res.passed


def test_gamp_stationarity_and_amp_identity(criterion):
    res = checks.check_gamp(runs=10, limit=1e-6, traj_limit=1e-10)
    criterion("10 GAMP runs zero all five gradient blocks (1e-6); GAMP == AMP (1e-10)",
              res.passed, f"worst block {res.worst:.2e}; {res.detail}")
    assert res.passed


def _cell(algo, rho, alpha, **cfg):
    spec = SweepSpec(rho_grid=[rho], alpha_grid=[alpha], n=CELL_N, delta0=CELL_DELTA0,
                     trials=CELL_SEEDS, algo=SolverConfig(algo, **cfg))
    cell = run_sweep(spec)[0]
    return int(round(cell.success_rate * CELL_SEEDS)), cell


def test_phase_diagram_cells(criterion):
    t0 = time.perf_counter()
    amp_a, _ = _cell("amp", 0.1, 0.5)
    bethe_a, _ = _cell("bethe-min", 0.1, 0.5)
    mfseq_b, cell_b = _cell("mf-seq", 0.1, 0.5)
    mflearn_c, _ = _cell("mf-learn", 0.1, 0.4)
    amp_d, cell_d = _cell("amp", 0.3, 0.35)
    mflearn_d, _ = _cell("mf-learn", 0.3, 0.35)
    parts = {
        "a": amp_a >= 18 and bethe_a >= 18,
        "b": mfseq_b <= 2,
        "c": mflearn_c >= 15,
        "d": amp_d >= 15 and mflearn_d < amp_d,
    }
    detail = (f"(a) amp {amp_a}/20, bethe-min {bethe_a}/20 [{'ok' if parts['a'] else 'fail'}]; "
              f"(b) mf-seq {mfseq_b}/20, median mse {cell_b.median_mse:.1e} "
              f"[{'ok' if parts['b'] else 'fail'}]; "
              f"(c) mf-learn {mflearn_c}/20 [{'ok' if parts['c'] else 'fail'}]; "
              f"(d) amp {amp_d}/20 (median mse {cell_d.median_mse:.1e}), mf-learn {mflearn_d}/20 "
              f"[{'ok' if parts['d'] else 'fail'}]; {time.perf_counter() - t0:.0f}s")
    ok = all(parts.values())
    criterion("phase-diagram cells at N=512, 20 seeds, success mse <= 1e-6", ok, detail)
    assert ok, detail


def test_region_nesting(criterion):
    rho_grid = list(np.round(np.linspace(0.05, 0.4, 6), 4))
    alpha_grid = list(np.round(np.linspace(0.1, 0.9, 8), 4))
    grids = {}
    for algo in ("bethe-min", "mf-learn", "mf-seq"):
        spec = SweepSpec(rho_grid=rho_grid, alpha_grid=alpha_grid, n=256, delta0=1e-8, trials=10,
                         algo=SolverConfig(algo))
        grids[algo] = success_grid(run_sweep(spec), len(rho_grid), len(alpha_grid))
    ok1, bad1 = region_contains(grids["bethe-min"], grids["mf-learn"], slack=1)
    ok2, bad2 = region_contains(grids["mf-learn"], grids["mf-seq"], slack=1)
    sizes = {k: int(v.sum()) for k, v in grids.items()}
    ok = ok1 and ok2
    criterion("success regions bethe-min >= mf-learn >= mf-seq, 6x8 grid, N=256, one-cell slack",
              ok, f"region sizes {sizes}; violations {bad1 + bad2}")
    assert ok


def test_scalar_oracle(criterion):
    res = checks.check_scalar_oracle(limit=1e-12)
    criterion("N=1 exact posterior oracle == denoiser, rel <= 1e-12", res.passed,
              f"worst {res.worst:.2e}")
    assert res.passed


def _run_cli(argv):
    code = cli_main(argv)
    assert code == 0, f"{argv} exited with {code}"


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_cli_determinism(criterion, tmp_path):
    p = lambda name: os.fspath(tmp_path / name)
    results = {}
    for k in (1, 2):
        _run_cli(["gen", "--n", "128", "--m", "64", "--rho", "0.1", "--delta0", "1e-8",
                  "--seed", "7", "--out", p(f"inst{k}.json")])
    results["gen"] = _read(p("inst1.json")) == _read(p("inst2.json"))
    for algo in ("amp", "mf-learn", "bethe-min"):
        for k in (1, 2):
            _run_cli(["solve", "--algo", algo, "--instance", p("inst1.json"), "--trace",
                      "--out", p(f"{algo}{k}.json")])
        results[f"solve {algo}"] = _read(p(f"{algo}1.json")) == _read(p(f"{algo}2.json"))
    for k in (1, 2):
        _run_cli(["solve", "--algo", "amp", "--instance", p("inst1.json"), "--init", "random",
                  "--seed", "3", "--out", p(f"rand{k}.json")])
    results["solve random init"] = _read(p("rand1.json")) == _read(p("rand2.json"))
    sweep = ["sweep", "--rho", "0.1:0.2:0.1", "--alpha", "0.3,0.6", "--n", "64", "--trials", "3",
             "--algo", "amp", "--seed", "5"]
    _run_cli(sweep + ["--workers", "1", "--out", p("g1.csv")])
    _run_cli(sweep + ["--workers", "1", "--out", p("g2.csv")])
    _run_cli(sweep + ["--workers", "2", "--out", p("g3.csv")])
    results["sweep"] = _read(p("g1.csv")) == _read(p("g2.csv"))
    # identical numeric contents across worker counts
    results["sweep across workers"] = _read(p("g1.csv")) == _read(p("g3.csv"))
    for k in (1, 2):
        assert cli_main(["check", "--out", p(f"check{k}.txt")]) in (0, 2)
    results["check"] = _read(p("check1.txt")) == _read(p("check2.txt"))
    ok = all(results.values())
    criterion("CLI outputs byte-identical for repeated runs and across worker counts", ok,
              ", ".join(f"{k}={'same' if v else 'DIFF'}" for k, v in results.items()))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
