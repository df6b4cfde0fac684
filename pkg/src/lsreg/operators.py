"""Forward operators for the two model problems and their adjoints.

* Inverse potential problem: the unknown is the source ``u`` in
  ``-div(sigma grad w) = u``, ``w = g`` on the boundary; the data are the
  Neumann trace ``dw/dnu``.
* Inverse conductivity problem: the unknown is the coefficient ``u`` in
  ``-div(u grad w) = f``, ``w = g`` on the boundary; by default the data are
  again ``dw/dnu`` (Dirichlet-to-Neumann setting).  ``literal_trace=True``
  measures ``w`` on the boundary instead, which reproduces ``g``.

Adjoints act between the trapezoidal ``L2(boundary)`` and ``L2(Omega)`` inner
products, so ``F'(u)^* r`` is the gradient of ``0.5 * ||F(u) - y||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .elliptic import (EllipticSystem, SolverSettings, solve_dirichlet, solve_laplace_dirichlet,
                       solve_neumann, stiffness_sensitivity)
from .grid import Grid2D, boundary_trace, gradient, normal_derivative
from .levelset import AdmissibleBox

__all__ = [
    "PotentialProblem",
    "ConductivityProblem",
    "f1_forward",
    "f1_adjoint",
    "f2_forward",
    "f2_adjoint_gradient",
]

ADJOINT_MODES = ("discrete", "harmonic")


def _check_mode(mode):
    if mode not in ADJOINT_MODES:
        raise ValueError(f"adjoint mode must be one of {ADJOINT_MODES}, got {mode!r}")


@dataclass
class PotentialProblem:
    sigma: np.ndarray
    g: np.ndarray
    grid: Grid2D
    settings: SolverSettings = field(default_factory=SolverSettings)
    adjoint_mode: str = "discrete"

    kind = "potential"

    def __post_init__(self):
        self.sigma = self.grid.check(self.sigma, "sigma")
        self.g = self.grid.check_trace(self.g, "g")
        if np.min(self.sigma) <= 0:
            raise ValueError("sigma must be strictly positive")
        _check_mode(self.adjoint_mode)

    @cached_property
    def system(self) -> EllipticSystem:
        return EllipticSystem(self.sigma, self.grid, "dirichlet", self.settings)

    def forward(self, u):
        return f1_forward(u, self)

    def adjoint(self, u, w, r):
        return f1_adjoint(r, self, self.adjoint_mode)


@dataclass
class ConductivityProblem:
    f: np.ndarray
    g: np.ndarray
    box: AdmissibleBox
    grid: Grid2D
    settings: SolverSettings = field(default_factory=SolverSettings)
    adjoint_mode: str = "discrete"
    literal_trace: bool = False

    kind = "conductivity"

    def __post_init__(self):
        self.f = self.grid.check(self.f, "f")
        self.g = self.grid.check_trace(self.g, "g")
        if self.box.m <= 0:
            raise ValueError("conductivity problem needs a box with m > 0")
        _check_mode(self.adjoint_mode)

    def measure(self, w: np.ndarray) -> np.ndarray:
        if self.literal_trace:
            return boundary_trace(w, self.grid)
        return normal_derivative(w, self.grid)

    def forward(self, u):
        return f2_forward(u, self)

    def adjoint(self, u, w, r):
        return f2_adjoint_gradient(u, w, r, self, self.adjoint_mode)


def f1_forward(u: np.ndarray, prob: PotentialProblem):
    """Return the Neumann data ``y`` and the potential ``w`` for source ``u``."""
    grid = prob.grid
    w = solve_dirichlet(prob.sigma, grid.check(u, "u"), prob.g, grid, system=prob.system)
    return normal_derivative(w, grid), w


def f1_adjoint(r: np.ndarray, prob: PotentialProblem, mode: str = "discrete") -> np.ndarray:
    """Adjoint of the source-to-Neumann-data map applied to a boundary residual.

    ``mode="harmonic"`` returns the harmonic extension of ``r``; ``"discrete"``
    the exact transpose of the assembled discrete map.
    """
    _check_mode(mode)
    grid = prob.grid
    r = grid.check_trace(r, "residual")
    if mode == "harmonic":
        return solve_laplace_dirichlet(r, grid, prob.settings)
    I = grid.interior_flat
    b = grid.normal_derivative_matrix[:, I].T @ (grid.boundary_weights * r)
    z = np.zeros(grid.size)
    z[I] = prob.system.solve_matrix(b)
    return z.reshape(grid.shape)


def f2_forward(u: np.ndarray, prob: ConductivityProblem):
    """Return the boundary measurement ``y`` and the potential ``w`` for coefficient ``u``."""
    grid = prob.grid
    u = grid.check(u, "u")
    if not prob.box.contains(u, tol=1e-12):
        raise ValueError(f"coefficient leaves the admissible box [{prob.box.m}, {prob.box.M}]")
    w = solve_dirichlet(u, prob.f, prob.g, grid, prob.settings)
    return prob.measure(w), w


def f2_adjoint_gradient(u: np.ndarray, w: np.ndarray, r: np.ndarray, prob: ConductivityProblem,
                        mode: str = "discrete") -> np.ndarray:
    """Adjoint of the linearized coefficient-to-data map applied to ``r``.

    ``mode="harmonic"`` solves ``div(u grad v) = 0``, ``dv/dnu = r`` and returns the
    raw product ``grad w . grad v``.  ``mode="discrete"`` returns the exact
    gradient of ``0.5*||F(u) - y||^2`` when ``r = F(u) - y``, obtained from a
    Dirichlet adjoint solve and the sensitivity of the flux-form stiffness.
    """
    _check_mode(mode)
    grid = prob.grid
    u = grid.check(u, "u")
    w = grid.check(w, "w")
    r = grid.check_trace(r, "residual")
    if mode == "harmonic":
        # v_nu = r  <=>  u * dv/dnu = u * r
        v = solve_neumann(u, u[grid.boundary_rows, grid.boundary_cols] * r, grid, prob.settings)
        gw, gv = gradient(w, grid), gradient(v, grid)
        return gw.x * gv.x + gw.y * gv.y
    if prob.literal_trace:
        # the Dirichlet trace does not depend on u
        return grid.full(0.0)
    system = EllipticSystem(u, grid, "dirichlet", prob.settings)
    I = grid.interior_flat
    b = grid.normal_derivative_matrix[:, I].T @ (grid.boundary_weights * r)
    lam = np.zeros(grid.size)
    lam[I] = system.solve_matrix(b)
    dJ = -stiffness_sensitivity(u, lam, w, grid)
    return dJ / grid.weights
