"""End-to-end experiments driven by a configuration file."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..elliptic import SolverSettings
from ..grid import Grid2D
from ..inversion import (AlphaRule, InversionAborted, InversionConfig, PriorData, RunReport,
                         default_prior, run_inversion)
from ..levelset import AdmissibleBox
from ..operators import ConductivityProblem, PotentialProblem
from .config import Config, load_config
from .io import write_field_csv, write_json, write_trace_csv
from .noise import NoiseSpec, add_noise
from .phantom import Law, PhantomSpec, make_phantom

__all__ = ["Setup", "build_setup", "synthesize", "run_experiment", "sweep_noise",
           "check_stability", "SWEEP_COLUMNS"]

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("delta", "alpha", "final_misfit", "l1_error_u", "iterations", "stop_reason", "error")


@dataclass
class Setup:
    """Typed objects built from a validated :class:`Config`."""

    config: Config
    grid: Grid2D
    box: AdmissibleBox
    phantom: PhantomSpec
    problem: PotentialProblem | ConductivityProblem
    noise: NoiseSpec
    inversion: InversionConfig
    prior: PriorData


def _boundary_data(kind, grid: Grid2D) -> np.ndarray:
    X, Y = grid.coords
    rows, cols = grid.boundary_rows, grid.boundary_cols
    if kind == "zero":
        return np.zeros(grid.n_boundary)
    if kind == "x":
        return X[rows, cols].copy()
    if kind == "y":
        return Y[rows, cols].copy()
    return np.full(grid.n_boundary, float(kind))


def _build(cfg: Config, section: str, fn, *args, **kwargs):
    """Call a constructor and report its ValueError at the section's line."""
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise cfg.error(section, str(exc)) from None


def build_setup(cfg: Config) -> Setup:
    g = cfg["grid"]
    grid = _build(cfg, "grid", Grid2D, g["nx"], g["ny"], g["x0"], g["x1"], g["y0"], g["y1"])
    box = _build(cfg, "phantom.box", AdmissibleBox, *cfg["phantom.box"])

    p = cfg["phantom"]
    laws = [_build(cfg, f"phantom.{k}", Law, p[k]["law"], p[k]["a"], p[k]["b"]) for k in ("psi1", "psi2")]
    phantom = _build(cfg, "phantom", PhantomSpec, p["shape"], tuple(map(tuple, p["centers"])),
                     tuple(p["radii"]), laws[0], laws[1], box)
    _build(cfg, "phantom", phantom.signed_distance, grid)

    s = cfg["solver"]
    settings = _build(cfg, "solver", SolverSettings, s["method"], s["rel_tol"], s["max_iters"])

    pr = cfg["problem"]
    g_trace = _boundary_data(pr["g"], grid)
    if pr["kind"] == "potential":
        problem = _build(cfg, "problem", PotentialProblem, grid.full(pr["sigma"]), g_trace, grid,
                         settings, pr["adjoint"])
    else:
        problem = _build(cfg, "problem", ConductivityProblem, grid.full(pr["source"]), g_trace, box,
                         grid, settings, pr["adjoint"], pr["f2_literal_trace"])

    noise = _build(cfg, "noise", NoiseSpec, cfg["noise.delta_rel"], cfg["noise.seed"])

    r, u, st = cfg["reg"], cfg["update"], cfg["stop"]
    rule = None
    if r["alpha_rule"] is not None:
        rule = _build(cfg, "reg.alpha_rule", AlphaRule, r["alpha_rule"]["c"], r["alpha_rule"]["p"])
    flip = None if u["sign_flip"] == "auto" else u["sign_flip"]
    inv = _build(cfg, "reg", InversionConfig, alpha=r["alpha"],
                 betas=(r["beta1"], r["beta2"], r["beta3"]), eps0=r["eps0"],
                 eps_decay=r["eps_decay"], beta_tv=r["beta_tv"], scheme=u["scheme"],
                 sign_flip=flip, backtracking=u["backtracking"], tau=st["tau"],
                 max_iters=st["max_iters"], alpha_rule=rule)
    if inv.betas[1] == 0 or inv.betas[2] == 0:
        raise cfg.error("reg", "beta2 and beta3 must be positive")

    prior = default_prior(grid, box, cfg["init.radius"])
    return Setup(cfg, grid, box, phantom, problem, noise, inv, prior)


def _as_config(config) -> Config:
    return config if isinstance(config, Config) else load_config(config)


def synthesize(setup: Setup):
    """Return ``(u_true, state_true, y_clean, y_delta, delta_abs)``."""
    u_true, state_true = make_phantom(setup.phantom, setup.grid)
    y, _ = setup.problem.forward(u_true)
    try:
        y_delta, delta_abs = add_noise(y, setup.noise, setup.grid)
    except ValueError as exc:
        raise setup.config.error("noise.delta_rel", str(exc)) from None
    return u_true, state_true, y, y_delta, delta_abs


def _final(report: RunReport) -> dict:
    last = report.records[-1] if report.records else {}
    return {"misfit": last.get("misfit"), "l1_error_u": last.get("l1_error_u")}


def run_experiment(config, out_dir: str | Path | None = None, callback=None) -> dict:
    """Run phantom, data synthesis, noise and inversion; write all artifacts.

    ``config`` is a path or a :class:`Config`.  Artifacts go to ``out_dir``
    (default ``out.dir`` from the config).  Returns the report dictionary
    that is also written to ``report.json``.  A mid-run solver failure still
    writes the report, with stop reason ``SolverFailure``, then re-raises.
    """
    cfg = _as_config(config)
    setup = build_setup(cfg)
    out = Path(out_dir if out_dir is not None else cfg["out.dir"])
    out.mkdir(parents=True, exist_ok=True)
    grid = setup.grid

    t0 = time.perf_counter()
    u_true, _, _, y_delta, delta_abs = synthesize(setup)
    failure = None
    try:
        report = run_inversion(setup.problem, y_delta, delta_abs, setup.prior, setup.inversion,
                               setup.box, truth=u_true, callback=callback)
    except InversionAborted as exc:
        report, failure = exc.report, exc
        report.stop_reason = "SolverFailure"
    wall = time.perf_counter() - t0

    write_field_csv(out / "u_true.csv", u_true, grid)
    write_trace_csv(out / "data.csv", y_delta, grid)
    if report.state is not None:
        st = report.state
        write_field_csv(out / "u_rec.csv", st.coefficient(), grid)
        write_field_csv(out / "phi.csv", st.phi, grid)
        write_field_csv(out / "psi1.csv", st.psi1, grid)
        write_field_csv(out / "psi2.csv", st.psi2, grid)

    result = {"config": cfg.data, **report.to_dict(), "final": _final(report)}
    if failure is not None:
        result["error"] = str(failure)
    result["wall_time"] = wall
    write_json(out / "report.json", result)
    if failure is not None:
        raise failure
    return result


def _sweep_one(cfg: Config, delta: float, out: Path) -> dict:
    run_cfg = cfg.copy()
    run_cfg.set("noise.delta_rel", float(delta))
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row["delta"] = float(delta)
    try:
        res = run_experiment(run_cfg, out / f"delta_{delta:g}")
    except Exception as exc:  # noqa: BLE001  any failure is recorded, the sweep continues
        log.warning("sweep run delta=%g failed: %s", delta, exc)
        row.update(alpha=math.nan, final_misfit=math.nan, l1_error_u=math.nan,
                   iterations=-1, stop_reason="Failed", error=f"{type(exc).__name__}: {exc}")
        return row
    row.update(alpha=res["alpha"], final_misfit=res["final"]["misfit"],
               l1_error_u=res["final"]["l1_error_u"], iterations=res["iterations"],
               stop_reason=res["stop_reason"])
    return row


def sweep_noise(config, deltas, out_dir: str | Path | None = None, jobs: int = 1) -> list[dict]:
    """Run one experiment per relative noise level and write ``sweep.csv``.

    ``deltas`` must be sorted in descending order.  Each run writes into its
    own ``delta_<value>`` subdirectory; runs may execute in parallel when
    ``jobs > 1``.  Failed runs appear as rows with ``stop_reason = Failed``.
    """
    cfg = _as_config(config)
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("need at least one noise level")
    if any(d < 0 for d in deltas) or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be non-negative and strictly descending")
    build_setup(cfg)  # fail fast on an invalid config
    out = Path(out_dir if out_dir is not None else cfg["out.dir"])
    out.mkdir(parents=True, exist_ok=True)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, [cfg] * len(deltas), deltas, [out] * len(deltas)))
    else:
        rows = [_sweep_one(cfg, d, out) for d in deltas]

    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def check_stability(rows: list[dict], slack: float = 1.05) -> tuple[bool, bool]:
    """Check the sweep table for stability.

    Returns ``(monotone, exact_best)``.  ``monotone`` holds when the relative
    L1 error of the noisy rows does not grow by more than ``slack`` from one
    noise level to the next smaller one.  ``exact_best`` holds when a
    ``delta = 0`` row exists and its final misfit is below every noisy row's.
    """
    ok = [r for r in rows if r["stop_reason"] != "Failed"]
    noisy = sorted((r for r in ok if r["delta"] > 0), key=lambda r: -r["delta"])
    errs = [r["l1_error_u"] for r in noisy]
    monotone = all(b <= a * slack for a, b in zip(errs, errs[1:]))
    exact = [r for r in ok if r["delta"] == 0]
    exact_best = bool(exact) and all(exact[0]["final_misfit"] < r["final_misfit"] for r in noisy)
    return monotone, exact_best
