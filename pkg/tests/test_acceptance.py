"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line to the session summary before
asserting, so a single ``pytest`` run lists the verdict for all criteria.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from lsreg.grid import Grid2D, boundary_trace, norm
from lsreg.harness import check_stability, load_config, make_phantom, reference_phantom, run_experiment
from lsreg.harness.checks import adjoint_mismatch, gradient_fd_mismatch, manufactured_errors
from lsreg.harness.experiment import sweep_noise
from lsreg.inversion import InversionConfig, default_prior, run_inversion
from lsreg.levelset import AdmissibleBox, heaviside, heaviside_smooth
from lsreg.operators import ConductivityProblem, PotentialProblem

REFERENCE = Path(__file__).parents[1] / "configs" / "reference.yaml"
BOX = AdmissibleBox(0.5, 3.5)

# per-iteration records of every inversion run in this module, for criterion 10
RUN_RECORDS: list[tuple[str, list[dict], AdmissibleBox]] = []


@pytest.fixture
def verdict(acceptance_log):
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        acceptance_log.append(line)
        print(line)
        return ok
    return record


def test_criterion_01_solver_order(verdict):
    t0 = time.perf_counter()
    errs = {case: manufactured_errors(case, (32, 64, 128)) for case in ("sine", "variable")}
    elapsed = time.perf_counter() - t0
    ratios = {c: [e[0] / e[1], e[1] / e[2]] for c, e in errs.items()}
    ok = all(2.5 <= r <= 6 for rs in ratios.values() for r in rs) and elapsed < 10
    detail = "; ".join(f"{c} ratios {rs[0]:.2f}, {rs[1]:.2f}" for c, rs in ratios.items())
    assert verdict(1, ok, f"{detail}; {elapsed:.2f}s (need ratios in [2.5, 6], < 10 s)")


def test_criterion_02_adjoint_identity(verdict):
    sizes = (8, 16, 24, 32)
    worst = max(adjoint_mismatch(sizes[k % 4], seed=k) for k in range(20))
    assert verdict(2, worst < 1e-8, f"worst of 20 pairs on 8..32 grids: {worst:.2e} (need < 1e-8)")


def test_criterion_03_gradient_fidelity(verdict):
    gaps = {kind: max(gradient_fd_mismatch(kind, n=32, n_dirs=5, tau=1e-4))
            for kind in ("potential", "conductivity")}
    ok = all(g < 1e-3 for g in gaps.values())
    detail = ", ".join(f"{k} {g:.2e}" for k, g in gaps.items())
    assert verdict(3, ok, f"worst relative gap over 5 directions: {detail} (need < 1e-3)")


def test_criterion_04_heaviside_smoothing(verdict):
    g = Grid2D.unit(128)
    X, Y = g.coords
    phi = 0.3 - np.hypot(X - 0.5, Y - 0.5)
    H = heaviside(phi)
    gaps = [norm(heaviside_smooth(phi, k * g.h) - H, g, "L1") for k in (8, 4, 2)]
    ratios = [gaps[1] / gaps[0], gaps[2] / gaps[1]]
    ok = all(0.4 <= r <= 0.6 for r in ratios)
    assert verdict(4, ok, f"L1 gap ratios on halving eps: {ratios[0]:.3f}, {ratios[1]:.3f} "
                          "(need 0.5 +- 20%)")


def test_criterion_05_perimeter(verdict):
    g = Grid2D.unit(128)
    X, Y = g.coords
    phi = 0.3 - np.hypot(X - 0.5, Y - 0.5)
    tv = norm(heaviside_smooth(phi, 2 * g.h), g, "TV", beta_tv=1e-6)
    rel = abs(tv - 2 * np.pi * 0.3) / (2 * np.pi * 0.3)
    assert verdict(5, rel < 0.1, f"TV {tv:.4f} vs perimeter {2 * np.pi * 0.3:.4f}, "
                                 f"relative gap {rel:.3f} (need < 0.1)")


def _monotone_run(kind, scheme, betas):
    g = Grid2D.unit(64)
    X, _ = g.coords
    u_true, _ = make_phantom(reference_phantom(BOX), g)
    if kind == "potential":
        prob = PotentialProblem(g.full(1.0), np.zeros(g.n_boundary), g)
    else:
        prob = ConductivityProblem(g.full(0.0), boundary_trace(X, g), BOX, g)
    data = prob.forward(u_true)[0]
    cfg = InversionConfig(alpha=0.01, betas=betas, eps0=0.1, beta_tv=1e-2, scheme=scheme,
                          backtracking=True, max_iters=50)
    rep = run_inversion(prob, data, 0.0, default_prior(g, BOX), cfg, BOX, truth=u_true)
    RUN_RECORDS.append((f"{kind}/{scheme}", rep.records, BOX))
    return rep


@pytest.mark.slow
def test_criterion_06_monotone_descent(verdict):
    runs = {
        "explicit/potential": _monotone_run("potential", "explicit", (1e-5, 1e-3, 1e-5)),
        "semi-implicit/conductivity": _monotone_run("conductivity", "semi-implicit", (1e-4, 1e-2, 1e-3)),
    }
    parts, ok = [], True
    for name, rep in runs.items():
        increases = int(np.sum(np.diff(rep.totals) > 0))
        ok &= rep.iterations == 50 and increases == 0
        parts.append(f"{name}: {rep.iterations} iterations, {increases} increases")
    assert verdict(6, ok, "; ".join(parts) + " (need 50 iterations, 0 increases)")


@pytest.mark.slow
def test_criterion_07_end_to_end(verdict, tmp_path):
    t0 = time.perf_counter()
    res = run_experiment(REFERENCE, tmp_path)
    elapsed = time.perf_counter() - t0
    cfg = load_config(REFERENCE)
    RUN_RECORDS.append(("reference", res["records"], AdmissibleBox(*cfg["phantom.box"])))
    e0, e1 = res["records"][0]["l1_error_u"], res["final"]["l1_error_u"]
    drop = 1 - e1 / e0
    stopped = res["stop_reason"] == "Discrepancy" and res["iterations"] <= 500
    ok = stopped and drop >= 0.5 and elapsed < 300
    assert verdict(7, ok, f"stop {res['stop_reason']} after {res['iterations']} iterations; "
                          f"L1 error {e0:.4f} -> {e1:.4f} (drop {drop:.1%}, need >= 50%); "
                          f"{elapsed:.1f}s (need < 300 s)")


@pytest.mark.slow
def test_criterion_08_stability_sweep(verdict, tmp_path):
    rows = sweep_noise(REFERENCE, [0.04, 0.02, 0.01, 0.0], tmp_path)
    box = AdmissibleBox(*load_config(REFERENCE)["phantom.box"])
    for r in rows:
        if r["stop_reason"] != "Failed":
            report = json.loads((tmp_path / f"delta_{r['delta']:g}" / "report.json").read_text())
            RUN_RECORDS.append((f"sweep delta={r['delta']:g}", report["records"], box))
    monotone, exact_best = check_stability(rows)
    table = ", ".join(f"{r['delta']:g}: err {r['l1_error_u']:.4f} misfit {r['final_misfit']:.2e}"
                      for r in rows)
    ok = monotone and exact_best and all(r["stop_reason"] != "Failed" for r in rows)
    assert verdict(8, ok, f"{table}; non-increasing {monotone}, exact data best {exact_best}")


@pytest.mark.slow
def test_criterion_09_determinism(verdict, tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        run_experiment(REFERENCE, out)
    mismatched = [name for name in ("u_true.csv", "u_rec.csv", "phi.csv", "psi1.csv", "psi2.csv", "data.csv")
                  if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes()]
    reports = []
    for out in outs:
        rep = json.loads((out / "report.json").read_text())
        rep.pop("wall_time")
        reports.append(json.dumps(rep, sort_keys=True))
    if reports[0] != reports[1]:
        mismatched.append("report.json")
    ok = not mismatched
    assert verdict(9, ok, "field CSVs and report identical" if ok else f"differ: {mismatched}")


def test_criterion_10_admissibility(verdict):
    if not RUN_RECORDS:
        pytest.skip("no acceptance runs were executed in this session")
    violations = 0
    iterates = 0
    for _, records, box in RUN_RECORDS:
        for r in records:
            iterates += 1
            violations += r["psi_min"] < box.m or r["psi_max"] > box.M
            violations += r["h_min"] < 0 or r["h_max"] > 1
    ok = violations == 0
    assert verdict(10, ok, f"{violations} violations over {iterates} iterates in "
                           f"{len(RUN_RECORDS)} runs")
