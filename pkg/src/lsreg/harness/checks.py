"""Fast invariant and oracle checks behind ``lsreg check``.

Each check runs on small grids in well under a second and returns a
:class:`CheckResult`; nothing here raises on a failed check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..elliptic import solve_dirichlet, solve_laplace_dirichlet, stiffness
from ..grid import Grid2D, boundary_inner, boundary_norm, boundary_trace, inner, norm
from ..levelset import AdmissibleBox, heaviside, heaviside_smooth
from ..operators import ConductivityProblem, PotentialProblem, f1_adjoint, f1_forward
from .noise import NoiseSpec, add_noise
from .phantom import make_phantom, reference_phantom

__all__ = ["CheckResult", "CHECKS", "run_checks", "manufactured_errors", "adjoint_mismatch",
           "gradient_fd_mismatch"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def manufactured_errors(case: str, sizes=(32, 64, 128)) -> list[float]:
    """Relative L2 errors of ``solve_dirichlet`` against a manufactured solution.

    ``case="sine"``: unit coefficient, exact ``sin(pi x) sin(pi y)``.
    ``case="variable"``: coefficient ``1 + x``, exact ``x(1-x) y(1-y)``.
    """
    errs = []
    for n in sizes:
        grid = Grid2D.unit(n)
        X, Y = grid.coords
        if case == "sine":
            exact = np.sin(np.pi * X) * np.sin(np.pi * Y)
            coeff, rhs = grid.full(1.0), 2.0 * np.pi**2 * exact
        elif case == "variable":
            exact = X * (1 - X) * Y * (1 - Y)
            coeff = 1.0 + X
            wx, wxx, wyy = (1 - 2 * X) * Y * (1 - Y), -2 * Y * (1 - Y), -2 * X * (1 - X)
            rhs = -(wx + coeff * wxx) - coeff * wyy
        else:
            raise ValueError(f"unknown manufactured case {case!r}")
        w = solve_dirichlet(coeff, rhs, np.zeros(grid.n_boundary), grid)
        errs.append(norm(w - exact, grid) / norm(exact, grid))
    return errs


def adjoint_mismatch(n: int, seed: int) -> float:
    """Normalized ``|<F u, r> - <u, F* r>|`` for the source problem with random ``u``, ``r``."""
    grid = Grid2D.unit(n)
    rng = np.random.default_rng(seed)
    prob = PotentialProblem(grid.full(1.0), np.zeros(grid.n_boundary), grid)
    u = rng.standard_normal(grid.shape)
    r = rng.standard_normal(grid.n_boundary)
    y, _ = f1_forward(u, prob)
    z = f1_adjoint(r, prob)
    return abs(boundary_inner(y, r, grid) - inner(u, z, grid)) / (norm(u, grid) * boundary_norm(r, grid))


def gradient_fd_mismatch(kind: str, n: int = 32, n_dirs: int = 5, tau: float = 1e-4,
                         seed: int = 0) -> list[float]:
    """Relative gap between adjoint and central-difference directional derivatives of the misfit.

    The misfit is ``0.5 * ||F(u) - y||^2`` with ``y`` generated from the
    reference phantom; ``u`` is a smooth admissible coefficient.
    """
    grid = Grid2D.unit(n)
    X, Y = grid.coords
    box = AdmissibleBox(0.5, 3.5)
    if kind == "potential":
        prob = PotentialProblem(grid.full(1.0), np.zeros(grid.n_boundary), grid)
    elif kind == "conductivity":
        prob = ConductivityProblem(grid.full(0.0), boundary_trace(X, grid), box, grid)
    else:
        raise ValueError(f"unknown problem kind {kind!r}")
    u_true, _ = make_phantom(reference_phantom(box), grid)
    data, _ = prob.forward(u_true)
    u = 1.5 + 0.5 * np.sin(3 * X) * np.cos(2 * Y)

    def misfit(c):
        return 0.5 * boundary_norm(prob.forward(c)[0] - data, grid) ** 2

    y, w = prob.forward(u)
    grad = prob.adjoint(u, w, y - data)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_dirs):
        d = 0.1 * rng.standard_normal(grid.shape)
        fd = (misfit(u + tau * d) - misfit(u - tau * d)) / (2 * tau)
        out.append(abs(fd - inner(grad, d, grid)) / abs(fd))
    return out


def _solver_order():
    ratios = []
    for case in ("sine", "variable"):
        e = manufactured_errors(case, (16, 32, 64))
        ratios += [e[0] / e[1], e[1] / e[2]]
    ok = all(2.5 <= r <= 6 for r in ratios)
    return ok, "refinement ratios " + ", ".join(f"{r:.2f}" for r in ratios)


def _laplace_affine():
    grid = Grid2D.unit(17)
    X, _ = grid.coords
    h = solve_laplace_dirichlet(boundary_trace(X, grid), grid)
    err = float(np.max(np.abs(h - X)))
    return err < 1e-9, f"max error {err:.2e}"


def _symmetry():
    grid = Grid2D(9, 7)
    X, Y = grid.coords
    S = stiffness(1.0 + X * Y, grid)
    asym = abs(S - S.T).max()
    return asym == 0, f"max |S - S^T| = {asym:.1e}"


def _adjoint():
    worst = max(adjoint_mismatch(n, seed) for n in (8, 16) for seed in range(3))
    return worst < 1e-8, f"worst normalized mismatch {worst:.2e}"


def _gradient():
    worst = max(max(gradient_fd_mismatch(k, n=16, n_dirs=2)) for k in ("potential", "conductivity"))
    return worst < 1e-3, f"worst relative gap {worst:.2e}"


def _heaviside():
    grid = Grid2D.unit(65)
    X, Y = grid.coords
    phi = 0.3 - np.hypot(X - 0.5, Y - 0.5)
    H = heaviside(phi)
    e = [norm(heaviside_smooth(phi, k * grid.h) - H, grid, "L1") for k in (8, 4)]
    ratio = e[0] / e[1]
    return 1.6 <= ratio <= 2.4, f"L1 gap ratio when eps halves {ratio:.2f}"


def _noise():
    grid = Grid2D.unit(16)
    y = np.cos(grid.arclength)
    yd, delta = add_noise(y, NoiseSpec(0.03, 7), grid)
    rel = boundary_norm(yd - y, grid) / boundary_norm(y, grid)
    return abs(rel - 0.03) < 1e-12, f"relative noise {rel:.15f}"


def _phantom_box():
    grid = Grid2D.unit(33)
    spec = reference_phantom()
    u, _ = make_phantom(spec, grid)
    return spec.box.contains(u), f"u range [{u.min():.3f}, {u.max():.3f}]"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "solver_order": _solver_order,
    "laplace_affine": _laplace_affine,
    "stiffness_symmetry": _symmetry,
    "adjoint_identity": _adjoint,
    "gradient_fd": _gradient,
    "heaviside_l1": _heaviside,
    "noise_exact": _noise,
    "phantom_in_box": _phantom_box,
}


def run_checks(names=None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    results = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}")
        try:
            ok, detail = CHECKS[name]()
        except Exception as exc:  # noqa: BLE001  a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))
    return results
