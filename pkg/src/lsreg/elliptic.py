"""Variable-coefficient Poisson solvers on the node-centred grid.

Every solve goes through the flux-form stiffness matrix

    S(k) = sum_faces  c_f * k_f * (l_f / h_f) * (e_a - e_b)(e_a - e_b)^T

where ``k_f`` is the harmonic mean of the nodal coefficient across the face,
``l_f / h_f`` the face length over the node spacing and ``c_f = 1/2`` for
faces lying on the outer boundary (trapezoidal control volumes).  Interior
rows of ``S / (hx*hy)`` are the usual five-point stencil for
``-div(k grad w)``; the full matrix is the discrete weak form used for the
Neumann problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid2D

__all__ = [
    "SolverError",
    "SolverSettings",
    "EllipticSystem",
    "face_coefficients",
    "stiffness",
    "stiffness_sensitivity",
    "solve_dirichlet",
    "solve_neumann",
    "solve_laplace_dirichlet",
    "solve_neumann_source",
    "solve_screened_neumann",
]


class SolverError(RuntimeError):
    """Linear solve failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SolverSettings:
    method: Literal["cg", "direct"] = "cg"
    rel_tol: float = 1e-10
    max_iters: int = 20000

    def __post_init__(self):
        if self.method not in ("cg", "direct"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not 0 < self.rel_tol < 1:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


def _check_coeff(coeff: np.ndarray, grid: Grid2D) -> np.ndarray:
    coeff = grid.check(coeff, "coefficient")
    if not np.all(np.isfinite(coeff)) or np.min(coeff) <= 0:
        raise ValueError("coefficient must be finite and strictly positive")
    return coeff


def _faces(grid: Grid2D):
    """Face list as (a, b, geometric weight) with flat node indices a < b."""
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    idx = np.arange(grid.size).reshape(grid.shape)
    # faces joining horizontal neighbours
    ax, bx = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    cx = np.full((ny, nx - 1), hy / hx)
    cx[[0, -1], :] *= 0.5
    # faces joining vertical neighbours
    ay, by = idx[:-1, :].ravel(), idx[1:, :].ravel()
    cy = np.full((ny - 1, nx), hx / hy)
    cy[:, [0, -1]] *= 0.5
    return (np.concatenate([ax, ay]), np.concatenate([bx, by]),
            np.concatenate([cx.ravel(), cy.ravel()]))


def face_coefficients(coeff: np.ndarray, grid: Grid2D):
    """Harmonic-mean face coefficients and the face geometry."""
    a, b, geo = _faces(grid)
    k = coeff.ravel()
    ka, kb = k[a], k[b]
    return 2.0 * ka * kb / (ka + kb), a, b, geo


def stiffness(coeff: np.ndarray, grid: Grid2D) -> sp.csr_matrix:
    coeff = _check_coeff(coeff, grid)
    kf, a, b, geo = face_coefficients(coeff, grid)
    c = kf * geo
    n = grid.size
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([c, c, -c, -c])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def stiffness_sensitivity(coeff: np.ndarray, v: np.ndarray, w: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Nodal derivative of ``v^T S(coeff) w`` with respect to ``coeff``."""
    coeff = _check_coeff(coeff, grid)
    _, a, b, geo = face_coefficients(coeff, grid)
    k = coeff.ravel()
    ka, kb = k[a], k[b]
    v, w = np.ravel(v), np.ravel(w)
    jump = geo * (v[a] - v[b]) * (w[a] - w[b])
    s2 = (ka + kb) ** 2
    out = np.zeros(grid.size)
    np.add.at(out, a, jump * 2.0 * kb**2 / s2)
    np.add.at(out, b, jump * 2.0 * ka**2 / s2)
    return out.reshape(grid.shape)


class EllipticSystem:
    """Assembled operator ``-div(coeff grad .)`` with a given boundary treatment.

    For ``bc_kind="dirichlet"`` the matrix acts on interior unknowns only and
    is SPD; for ``"neumann"`` it is the full singular stiffness matrix.
    Instances are immutable once built; a direct factorization is computed
    lazily and reused across solves.
    """

    def __init__(self, coeff: np.ndarray, grid: Grid2D, bc_kind: str = "dirichlet",
                 settings: SolverSettings | None = None):
        if bc_kind not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition {bc_kind!r}")
        self.grid = grid
        self.coefficient = _check_coeff(coeff, grid).copy()
        self.coefficient.flags.writeable = False
        self.bc_kind = bc_kind
        self.settings = settings or SolverSettings()
        self.stiffness = stiffness(self.coefficient, grid)
        if bc_kind == "dirichlet":
            I = grid.interior_flat
            self.matrix = self.stiffness[I][:, I].tocsr()
        else:
            self.matrix = self.stiffness

    @cached_property
    def _lu(self):
        if self.bc_kind == "dirichlet":
            return spla.splu(self.matrix.tocsc())
        # bordered system pins the weighted mean to zero
        c = sp.csr_matrix(self.grid.weights.reshape(-1, 1))
        K = sp.bmat([[self.matrix, c], [c.T, None]], format="csc")
        return spla.splu(K)

    @cached_property
    def _jacobi(self):
        d = self.matrix.diagonal()
        return spla.LinearOperator(self.matrix.shape, matvec=lambda x: x / d, dtype=float)

    def solve_matrix(self, b: np.ndarray) -> np.ndarray:
        """Solve ``matrix @ x = b``; for Neumann ``b`` must be compatible (zero sum)."""
        b = np.asarray(b, dtype=float)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(b)
        if self.settings.method == "direct":
            if self.bc_kind == "dirichlet":
                x = self._lu.solve(b)
            else:
                x = self._lu.solve(np.append(b, 0.0))[:-1]
        else:
            x, info = spla.cg(self.matrix, b, rtol=self.settings.rel_tol, atol=0.0,
                              maxiter=self.settings.max_iters, M=self._jacobi)
            if info != 0:
                raise SolverError(f"CG did not converge in {self.settings.max_iters} iterations "
                                  f"(bc={self.bc_kind}, n={b.size})")
        res = np.linalg.norm(self.matrix @ x - b)
        # CG's stopping test is on the preconditioned residual; re-check the true one
        if res > max(self.settings.rel_tol, 1e-12) * bnorm * 10:
            raise SolverError(f"linear residual {res / bnorm:.3e} exceeds tolerance")
        if self.bc_kind == "neumann":
            w = self.grid.weights.ravel()
            x = x - np.dot(w, x) / w.sum()
        return x


def solve_dirichlet(coeff: np.ndarray, rhs: np.ndarray, g: np.ndarray, grid: Grid2D,
                    settings: SolverSettings | None = None,
                    system: EllipticSystem | None = None) -> np.ndarray:
    """Solve ``-div(coeff grad w) = rhs`` in the interior with ``w = g`` on the boundary.

    ``system`` may carry a pre-assembled Dirichlet system for ``coeff``.
    """
    rhs = grid.check(rhs, "rhs")
    g = grid.check_trace(g, "g")
    if system is None:
        system = EllipticSystem(coeff, grid, "dirichlet", settings)
    I, B = grid.interior_flat, grid.boundary_flat
    b = grid.hx * grid.hy * rhs.ravel()[I]
    if np.any(g):
        b = b - system.stiffness[I][:, B] @ g
    w = np.empty(grid.size)
    w[B] = g
    w[I] = system.solve_matrix(b)
    return w.reshape(grid.shape)


def solve_neumann(coeff: np.ndarray, flux: np.ndarray, grid: Grid2D,
                  settings: SolverSettings | None = None,
                  system: EllipticSystem | None = None) -> np.ndarray:
    """Solve ``div(coeff grad v) = 0`` with ``coeff * dv/dnu = flux`` on the boundary.

    The flux is projected onto zero weighted mean before solving and the
    solution is returned with zero mean over the domain.
    """
    flux = grid.check_trace(flux, "flux")
    if system is None:
        system = EllipticSystem(coeff, grid, "neumann", settings)
    wb = grid.boundary_weights
    flux = flux - np.dot(wb, flux) / wb.sum()
    b = np.zeros(grid.size)
    b[grid.boundary_flat] = wb * flux
    return system.solve_matrix(b).reshape(grid.shape)


def solve_laplace_dirichlet(bdata: np.ndarray, grid: Grid2D,
                            settings: SolverSettings | None = None) -> np.ndarray:
    """Discrete harmonic extension of boundary data."""
    return solve_dirichlet(grid.full(1.0), grid.full(0.0), bdata, grid, settings)


def solve_neumann_source(coeff: np.ndarray, rhs: np.ndarray, grid: Grid2D,
                         settings: SolverSettings | None = None) -> np.ndarray:
    """Solve ``-div(coeff grad v) = rhs`` with zero normal flux.

    ``rhs`` is projected onto zero weighted mean first; the solution has zero
    mean over the domain.
    """
    rhs = grid.check(rhs, "rhs")
    w = grid.weights
    rhs = rhs - np.sum(w * rhs) / np.sum(w)
    system = EllipticSystem(coeff, grid, "neumann", settings)
    return system.solve_matrix((w * rhs).ravel()).reshape(grid.shape)


def solve_screened_neumann(rhs: np.ndarray, grid: Grid2D, shift: float = 1.0,
                           settings: SolverSettings | None = None) -> np.ndarray:
    """Solve ``(-laplace + shift) v = rhs`` with zero normal flux, ``shift > 0``."""
    if not shift > 0:
        raise ValueError("shift must be positive")
    rhs = grid.check(rhs, "rhs")
    settings = settings or SolverSettings()
    w = grid.weights.ravel()
    A = (stiffness(grid.full(1.0), grid) + shift * sp.diags(w)).tocsr()
    b = w * rhs.ravel()
    if not np.any(b):
        return grid.full(0.0)
    if settings.method == "direct":
        x = spla.spsolve(A.tocsc(), b)
    else:
        M = spla.LinearOperator(A.shape, matvec=lambda v, d=A.diagonal(): v / d, dtype=float)
        x, info = spla.cg(A, b, rtol=settings.rel_tol, atol=0.0, maxiter=settings.max_iters, M=M)
        if info != 0:
            raise SolverError("CG did not converge on the screened Neumann problem")
    return x.reshape(grid.shape)
