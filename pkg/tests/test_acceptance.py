"""Acceptance criteria at their stated tolerances; one PASS/FAIL line each in the summary."""

import filecmp
import json
import time
from importlib.resources import files

import numpy as np
import pytest

from rmpflab.cli import main
from rmpflab.verify import (check_algebra, check_closure, check_coriolis, check_curvature,
                            check_diagonal_scaling, check_geodesic, check_invariance,
                            check_lyapunov, check_lyapunov_exp1d, check_xi_psd,
                            invariance_task_paths)


def _run(command, config, out, *extra):
    start = time.perf_counter()
    status = main([command, "--config", config, "--out", str(out), *extra])
    return status, time.perf_counter() - start


@pytest.fixture(scope="session")
def shipped_runs(tmp_path_factory):
    """Each shipped experiment run once through the CLI; reused by several criteria."""
    root = tmp_path_factory.mktemp("shipped")
    cfg = {k: str(files("rmpflab") / "configs" / f"{k}.json") for k in ("exp1d", "exp2d_orbit", "reach_desk")}
    runs = {}
    for name, command in (("exp1d", "run"), ("exp2d_orbit", "run"), ("reach_desk", "reach")):
        status, secs = _run(command, cfg[name], root / name)
        runs[name] = {"status": status, "seconds": secs, "out": root / name, "config": cfg[name],
                      "command": command}
    return runs


def test_01_algebra(acceptance):
    start = time.perf_counter()
    rep = check_algebra(samples=200)
    secs = time.perf_counter() - start
    ok = rep.passed and rep.samples == 200 and secs < 5.0
    acceptance(1, "algebra equivalence", ok,
               f"max rel err {rep.max_rel_err:.2e} < 1e-8 over {rep.samples} instances in {secs:.2f}s (< 5 s)")
    assert ok


def test_02_closure(acceptance):
    flat = check_closure(samples=100, seed=1, tol=1e-8)
    structured = check_closure(samples=100, seed=11, tol=1e-6, structured=True)
    ok = flat.passed and structured.passed
    acceptance(2, "closure", ok,
               f"flat max rel {flat.max_rel_err:.2e} (< 1e-8); structured max rel "
               f"{structured.max_rel_err:.2e} (< 1e-6)")
    assert ok


def test_03_curvature_oracle(acceptance):
    rep = check_curvature(samples=100, h=1e-5, tol=1e-4)
    acceptance(3, "curvature oracle", rep.passed,
               f"max rel err {rep.max_rel_err:.2e} < 1e-4 over {rep.samples} leaf samples")
    assert rep.passed


def test_04_coriolis(acceptance):
    rep = check_coriolis(samples=100, tol=1e-4)
    acceptance(4, "Coriolis identity", rep.passed, f"max rel err {rep.max_rel_err:.2e} < 1e-4")
    assert rep.passed


def test_05_lyapunov(acceptance):
    rep = check_lyapunov(trajectories=10, dt=1e-3)
    ok = rep.passed and rep.samples == 10
    acceptance(5, "Lyapunov rate", ok,
               f"max |Vdot + qd'Bqd| {rep.max_rel_err:.2e} vs max(1e-6, 10 dt^2) = 1e-5; "
               f"worst per-step V rise {rep.max_abs_err:.2e} vs 1e-6")
    assert ok


def test_06_geodesic(acceptance):
    rep = check_geodesic(dt=1e-3, horizon=10.0, tol=1e-6)
    acceptance(6, "geodesic energy conservation", rep.passed,
               f"relative kinetic-energy drift {rep.max_rel_err:.2e} < 1e-6 over 10 s")
    assert rep.passed


def test_07_exp1d(acceptance, shipped_runs):
    run = shipped_runs["exp1d"]
    m = json.loads((run["out"] / "exp1d_metrics.json").read_text())["variants"]
    nojdot = check_lyapunov_exp1d(use_jdot=False)
    with_ok = run["status"] == 0 and m["with_jdot"]["final_task_error"] < 1e-3
    nojdot_ok = nojdot.expected_fail and not nojdot.passed and nojdot.max_abs_err > 1e-3
    nl = m["nonlinear_no_jdot"]
    nl_ok = nl["final_task_error"] < 1e-3 and nl["sup_task_deviation_from_designed"] > 1e-2
    ok = with_ok and nojdot_ok and nl_ok
    acceptance(7, "1-D experiment", ok,
               f"|x(T)-x0| with Jdot {m['with_jdot']['final_task_error']:.2e} (< 1e-3); "
               f"max rate violation without Jdot {nojdot.max_abs_err:.3f} (> 1e-3, expected fail); "
               f"nonlinear damping without Jdot converges ({nl['final_task_error']:.1e}) and deviates "
               f"{nl['sup_task_deviation_from_designed']:.3f} (> 1e-2)")
    assert ok


def test_08_orbit(acceptance, shipped_runs):
    run = shipped_runs["exp2d_orbit"]
    m = json.loads((run["out"] / "exp2d_metrics.json").read_text())
    on, off = m["curvature"], m["no_curvature"]
    min_s = min(r["min_obstacle_distance"] for r in on)
    on_ok = all(r["min_obstacle_distance"] > 0 and not r["collided"] and not r["failed"] for r in on)
    straight = [r["monotone_into_collision"] or r["straight_line_deviation"] < 1e-6 for r in off]
    ok = run["status"] == 0 and on_ok and any(straight)
    acceptance(8, "2-D orbit", ok,
               f"with curvature min s = {min_s:.3f} > 0 over {len(on)} starts; without curvature "
               f"{sum(r['monotone_into_collision'] for r in off)} monotone collisions, max straight-line "
               f"deviation {max(r['straight_line_deviation'] for r in off):.1e}")
    assert ok


def test_09_xi_psd(acceptance):
    rep = check_xi_psd(samples=1000)
    acceptance(9, "PSD condition", rep.passed,
               f"most negative symmetrised eigenvalue {-rep.max_abs_err:.1e} >= -1e-10 over {rep.samples} samples")
    assert rep.passed


def test_10_diagonal_scaling(acceptance):
    rep = check_diagonal_scaling(samples=100, tol=1e-8)
    acceptance(10, "diagonal-RMP lemma", rep.passed, f"max rel err {rep.max_rel_err:.2e} < 1e-8")
    assert rep.passed


def test_11_invariance(acceptance):
    rep = check_invariance(dt=1e-4, horizon=2.0)
    _, xa, xb = invariance_task_paths("cubic", dt=1e-4, horizon=2.0)
    sup = float(np.max(np.abs(xa - xb)))
    ok = rep.passed and sup < 1e-4
    acceptance(11, "invariance", ok, f"cubic reparameterisation sup-norm {sup:.2e} < 1e-4 ({rep.note})")
    assert ok


def test_12_reaching_suite(acceptance, shipped_runs):
    run = shipped_runs["reach_desk"]
    s = json.loads((run["out"] / "reach_summary.json").read_text())["summary"]
    rmp = s["rmpflow"]["collision_failure"]["mean"]
    pf = s["pf_basic_low"]["collision_failure"]["mean"]
    trials = s["rmpflow"]["trials"]
    ok = run["status"] == 0 and rmp == 0.0 and pf > 0.0 and run["seconds"] < 300.0 and trials == 20
    acceptance(12, "reaching suite", ok,
               f"collided fraction RMPflow {rmp:.2f} (= 0), PF-basic/low {pf:.2f} (> 0); "
               f"{trials} trials per method; suite wall time {run['seconds']:.0f} s (< 300 s)")
    assert ok


def _identical(a, b):
    cmp = filecmp.dircmp(a, b)
    same, diff, err = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not (cmp.left_only or cmp.right_only or diff or err), len(same), diff


def test_13_determinism(acceptance, shipped_runs, tmp_path):
    results = []
    for name, run in shipped_runs.items():
        extra = ("--jobs", "2") if run["command"] == "reach" else ()
        status, _ = _run(run["command"], run["config"], tmp_path / name, *extra)
        same, n, diff = _identical(run["out"], tmp_path / name)
        results.append((name, status == 0 and same, n, diff))
    for d in ("v1", "v2"):
        main(["verify", "--select", "algebra", "--select", "closure", "--select", "curvature",
              "--out", str(tmp_path / d)])
    same, n, diff = _identical(tmp_path / "v1", tmp_path / "v2")
    results.append(("verify", same, n, diff))
    ok = all(r[1] for r in results)
    acceptance(13, "determinism", ok,
               "; ".join(f"{name}: {n} files {'identical' if good else f'DIFFER {diff}'}"
                         for name, good, n, diff in results))
    assert ok
