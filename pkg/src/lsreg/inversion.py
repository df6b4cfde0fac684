"""Tikhonov objective, optimality-system terms and the level-set iterations.

The smoothed functional is

    G(phi, psi1, psi2) = ||F(P_eps(phi, psi1, psi2)) - y_delta||^2
                         + alpha * ( beta1 * TV(H_eps(phi))
                                   + beta2 * ||phi - phi0||_H1^2
                                   + beta3 * sum_j TV(psi_j - psi0_j) )

Two update schemes are provided.  The explicit scheme moves every field by
``(1/alpha) * L`` pointwise.  The semi-implicit scheme first smooths the
``L`` terms by one screened-Poisson solve (for ``phi``) and one
lagged-diffusivity TV solve (for each ``psi``), then applies the same
``1/alpha`` step.  Both optionally backtrack on ``G``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .elliptic import SolverError, solve_neumann_source, solve_screened_neumann
from .grid import Grid2D, boundary_norm, curvature_div, gradient, norm
from .levelset import (AdmissibleBox, LevelSetState, clamp_to_box, evaluate_R, heaviside_smooth,
                       heaviside_smooth_deriv, project)

__all__ = [
    "AlphaRule",
    "InversionConfig",
    "PriorData",
    "Objective",
    "RunReport",
    "InversionAborted",
    "default_prior",
    "evaluate_objective",
    "compute_L_terms",
    "update_explicit",
    "update_semi_implicit",
    "run_inversion",
]

log = logging.getLogger(__name__)

SCHEMES = ("explicit", "semi-implicit")
STOP_REASONS = ("Discrepancy", "MaxIters", "StepCollapse")


@dataclass(frozen=True)
class AlphaRule:
    """A-priori parameter choice ``alpha(delta) = c * delta**p``, ``0 < p < 2``."""

    c: float
    p: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("alpha rule needs c > 0")
        if not 0 < self.p < 2:
            raise ValueError("alpha rule needs 0 < p < 2")

    def __call__(self, delta: float) -> float:
        return self.c * delta**self.p


@dataclass(frozen=True)
class InversionConfig:
    alpha: float = 1.0
    betas: tuple[float, float, float] = (1.0, 1.0, 1.0)
    eps0: float | None = None
    eps_decay: float = 1.0
    beta_tv: float = 1e-3
    scheme: str = "explicit"
    # None picks the descent orientation for the scheme (explicit: True)
    sign_flip: bool | None = None
    backtracking: bool = True
    shrink: float = 0.5
    max_halvings: int = 20
    tau: float = 1.5
    max_iters: int = 500
    alpha_rule: AlphaRule | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if len(self.betas) != 3 or min(self.betas) < 0:
            raise ValueError("betas must be three non-negative numbers")
        if self.eps0 is not None and not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if not 0 < self.eps_decay <= 1:
            raise ValueError("eps_decay must lie in (0, 1]")
        if not self.beta_tv > 0:
            raise ValueError("beta_tv must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.tau > 1:
            raise ValueError("tau must be larger than 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")

    @property
    def direction(self) -> float:
        """Multiplier applied to the ``L`` terms before stepping."""
        flip = self.sign_flip
        if flip is None:
            flip = self.scheme == "explicit"
        return -1.0 if flip else 1.0

    def alpha_for(self, delta_abs: float) -> float:
        if self.alpha_rule is not None and delta_abs > 0:
            return self.alpha_rule(delta_abs)
        return self.alpha

    def eps_at(self, k: int, grid: Grid2D) -> float:
        eps0 = self.eps0 if self.eps0 is not None else 2.0 * grid.h
        return eps0 * self.eps_decay**k


@dataclass(frozen=True)
class PriorData:
    phi0: np.ndarray
    psi0_1: np.ndarray
    psi0_2: np.ndarray


def default_prior(grid: Grid2D, box: AdmissibleBox, radius: float = 0.25) -> PriorData:
    """Centred disk of the given radius with both levels at the middle of the box."""
    X, Y = grid.coords
    cx, cy = 0.5 * (grid.x0 + grid.x1), 0.5 * (grid.y0 + grid.y1)
    phi0 = radius - np.hypot(X - cx, Y - cy)
    mid = grid.full(box.mid)
    return PriorData(phi0, mid, mid.copy())


@dataclass
class Objective:
    total: float
    misfit: float
    penalties: tuple[float, float, float]
    residual: np.ndarray
    w: np.ndarray
    u: np.ndarray

    @property
    def residual_norm(self) -> float:
        return float(np.sqrt(self.misfit))


@dataclass
class RunReport:
    records: list[dict] = field(default_factory=list)
    stop_reason: str | None = None
    state: LevelSetState | None = None
    alpha: float | None = None
    delta_abs: float = 0.0

    @property
    def iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    @property
    def totals(self) -> np.ndarray:
        return np.array([r["total"] for r in self.records])

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "alpha": self.alpha,
            "delta_abs": self.delta_abs,
            "records": self.records,
        }


class InversionAborted(RuntimeError):
    """A PDE solve failed mid-run; ``report`` holds the history so far."""

    def __init__(self, message: str, report: RunReport):
        super().__init__(message)
        self.report = report


def evaluate_objective(state: LevelSetState, data: np.ndarray, prob, prior: PriorData,
                       config: InversionConfig, alpha: float | None = None) -> Objective:
    """Evaluate ``G`` at ``state``; the forward solution is kept for reuse."""
    grid = prob.grid
    alpha = config.alpha if alpha is None else alpha
    u = state.coefficient()
    y, w = prob.forward(u)
    residual = y - data
    misfit = boundary_norm(residual, grid) ** 2
    R, parts = evaluate_R(state, prior.phi0, prior.psi0_1, prior.psi0_2,
                          config.betas, config.beta_tv, grid)
    return Objective(misfit + alpha * R, misfit, parts, residual, w, u)


def compute_L_terms(state: LevelSetState, residual: np.ndarray, w: np.ndarray, prob,
                    config: InversionConfig):
    """Right-hand sides of the optimality system at ``state``.

    ``L_phi = (psi1 - psi2)/beta2 * H'(phi) * F'^*r
              - beta1/(2 beta2) * H'(phi) * div(grad H(phi) / |grad H(phi)|)``,
    ``L_psi1 = H(phi) * F'^*r / (2 beta3)``,
    ``L_psi2 = (1 - H(phi)) * F'^*r / (2 beta3)``.
    """
    b1, b2, b3 = config.betas
    if b2 == 0 or b3 == 0:
        raise ValueError("beta2 and beta3 must be non-zero to form the L terms")
    grid = prob.grid
    u = state.coefficient()
    adj = prob.adjoint(u, w, residual)
    H = heaviside_smooth(state.phi, state.eps)
    dH = heaviside_smooth_deriv(state.phi, state.eps)
    L_phi = (state.psi1 - state.psi2) / b2 * dH * adj
    if b1 != 0:
        L_phi = L_phi - b1 / (2.0 * b2) * dH * curvature_div(H, grid, config.beta_tv)
    L_psi1 = H * adj / (2.0 * b3)
    L_psi2 = (1.0 - H) * adj / (2.0 * b3)
    return L_phi, L_psi1, L_psi2


def _step(state: LevelSetState, deltas, s: float, box: AdmissibleBox) -> LevelSetState:
    d_phi, d1, d2 = deltas
    return replace(state,
                   phi=state.phi + s * d_phi,
                   psi1=clamp_to_box(state.psi1 + s * d1, box),
                   psi2=clamp_to_box(state.psi2 + s * d2, box))


def _line_search(state, deltas, alpha, box, config, objective, current):
    """Step ``s = 1/alpha`` along ``deltas``; halve while ``G`` does not decrease.

    Returns ``(new_state, step, evaluation)``; ``new_state`` is None when the
    step collapsed.
    """
    s = 1.0 / alpha
    if not config.backtracking or objective is None:
        trial = _step(state, deltas, s, box)
        return trial, s, objective(trial) if objective is not None else None
    for _ in range(config.max_halvings + 1):
        trial = _step(state, deltas, s, box)
        ev = objective(trial)
        if ev.total < current:
            return trial, s, ev
        s *= config.shrink
    return None, 0.0, None


def update_explicit(state: LevelSetState, L_terms, config: InversionConfig, box: AdmissibleBox,
                    alpha: float | None = None,
                    objective: Callable[[LevelSetState], Objective] | None = None,
                    current: float | None = None):
    """Explicit step ``field += (1/alpha) * direction * L``.

    With backtracking, ``objective`` and ``current`` (the present value of
    ``G``) are required.  Returns ``(new_state, step, evaluation)``; on step
    collapse ``new_state`` is None.
    """
    alpha = config.alpha if alpha is None else alpha
    d = config.direction
    deltas = tuple(d * L for L in L_terms)
    return _line_search(state, deltas, alpha, box, config, objective, current)


def update_semi_implicit(state: LevelSetState, L_terms, prior: PriorData, config: InversionConfig,
                         box: AdmissibleBox, grid: Grid2D, alpha: float | None = None,
                         objective: Callable[[LevelSetState], Objective] | None = None,
                         current: float | None = None, settings=None):
    """Semi-implicit step: solve for the increments, then ``field += (1/alpha) * delta``.

    ``delta_phi`` solves ``alpha (laplace - I) delta_phi = direction * L_phi``
    with zero normal derivative.  Each ``delta_psi_j`` solves
    ``alpha div(grad delta_psi_j / q_j) = direction * L_psi_j`` with zero normal
    flux and zero mean, where ``q_j = sqrt(|grad(psi_j - psi0_j)|^2 + beta_tv^2)``
    is frozen at the current iterate.
    """
    alpha = config.alpha if alpha is None else alpha
    d = config.direction
    L_phi, L1, L2 = L_terms
    d_phi = solve_screened_neumann(-d * L_phi / alpha, grid, 1.0, settings)
    d_psi = []
    for psi, psi0, L in ((state.psi1, prior.psi0_1, L1), (state.psi2, prior.psi0_2, L2)):
        g = gradient(psi - psi0, grid)
        q = np.sqrt(g.x**2 + g.y**2 + config.beta_tv**2)
        d_psi.append(solve_neumann_source(1.0 / q, -d * L / alpha, grid, settings))
    return _line_search(state, (d_phi, *d_psi), alpha, box, config, objective, current)


def _record(k, ev, state, step, u_true, grid):
    H = heaviside_smooth(state.phi, state.eps)
    rec = {
        "iteration": k,
        "misfit": ev.misfit,
        "residual_norm": ev.residual_norm,
        "tv_shape": ev.penalties[0],
        "h1_phi": ev.penalties[1],
        "tv_levels": ev.penalties[2],
        "total": ev.total,
        "step": step,
        "eps": state.eps,
        "psi_min": float(min(state.psi1.min(), state.psi2.min())),
        "psi_max": float(max(state.psi1.max(), state.psi2.max())),
        "h_min": float(H.min()),
        "h_max": float(H.max()),
    }
    if u_true is not None:
        # relative L1 error; absolute when the truth vanishes
        scale = norm(u_true, grid, "L1") or 1.0
        rec["l1_error_u"] = norm(ev.u - u_true, grid, "L1") / scale
    return rec


def run_inversion(prob, data: np.ndarray, delta_abs: float, prior: PriorData,
                  config: InversionConfig, box: AdmissibleBox,
                  truth: np.ndarray | None = None,
                  initial: LevelSetState | None = None,
                  callback: Callable[[int, LevelSetState, Objective], None] | None = None) -> RunReport:
    """Iterate the level-set scheme until the discrepancy principle, ``max_iters`` or step collapse.

    The iteration starts from ``initial`` (default: the prior) with the level
    functions clamped to ``box``.  With ``delta_abs == 0`` only ``max_iters``
    and step collapse can end the run.
    """
    grid = prob.grid
    if delta_abs < 0:
        raise ValueError("delta_abs must be non-negative")
    data = grid.check_trace(data, "data")
    alpha = config.alpha_for(delta_abs)
    if initial is None:
        initial = LevelSetState(prior.phi0.copy(), prior.psi0_1.copy(), prior.psi0_2.copy(),
                                config.eps_at(0, grid))
    state = replace(initial, psi1=clamp_to_box(initial.psi1, box),
                    psi2=clamp_to_box(initial.psi2, box))
    report = RunReport(alpha=alpha, delta_abs=delta_abs)

    def objective(s):
        return evaluate_objective(s, data, prob, prior, config, alpha)

    try:
        ev = objective(state)
    except SolverError as exc:
        raise InversionAborted(str(exc), report) from exc
    report.records.append(_record(0, ev, state, 0.0, truth, grid))
    if callback is not None:
        callback(0, state, ev)

    k = 0
    while True:
        if delta_abs > 0 and ev.residual_norm <= config.tau * delta_abs:
            report.stop_reason = "Discrepancy"
            break
        if k >= config.max_iters:
            report.stop_reason = "MaxIters"
            break
        try:
            eps = config.eps_at(k + 1, grid)
            if eps != state.eps:
                state = state.with_eps(eps)
                ev = objective(state)
            L = compute_L_terms(state, ev.residual, ev.w, prob, config)
            if config.scheme == "explicit":
                new, step, new_ev = update_explicit(state, L, config, box, alpha, objective, ev.total)
            else:
                new, step, new_ev = update_semi_implicit(state, L, prior, config, box, grid, alpha,
                                                         objective, ev.total, prob.settings)
        except SolverError as exc:
            report.state = state
            raise InversionAborted(str(exc), report) from exc
        if new is None:
            report.stop_reason = "StepCollapse"
            break
        state, ev = new, new_ev
        k += 1
        report.records.append(_record(k, ev, state, step, truth, grid))
        if callback is not None:
            callback(k, state, ev)
        log.debug("iter %d: misfit %.3e total %.3e step %.2e", k, ev.misfit, ev.total, step)

    report.state = state
    return report
