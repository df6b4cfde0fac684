"""Level-set parametrization of piecewise non-constant coefficients.

A coefficient is represented as ``u = psi1 * H(phi) + psi2 * (1 - H(phi))``:
``phi`` locates the inclusion ``{phi > 0}`` and the level functions
``psi1``, ``psi2`` carry the (spatially varying) values inside and outside.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid2D, norm

__all__ = [
    "AdmissibleBox",
    "LevelSetState",
    "heaviside",
    "heaviside_smooth",
    "heaviside_smooth_deriv",
    "apply_q",
    "project",
    "clamp_to_box",
    "evaluate_R",
]

Z_TOL = 1e-12


@dataclass(frozen=True)
class AdmissibleBox:
    """Pointwise bounds ``m <= f <= M`` for the level functions."""

    m: float
    M: float

    def __post_init__(self):
        if not self.m < self.M:
            raise ValueError(f"admissible box needs m < M, got [{self.m}, {self.M}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.m + self.M)

    def contains(self, f: np.ndarray, tol: float = 0.0) -> bool:
        f = np.asarray(f)
        return bool(np.all(f >= self.m - tol) and np.all(f <= self.M + tol))


@dataclass(frozen=True)
class LevelSetState:
    phi: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not (self.phi.shape == self.psi1.shape == self.psi2.shape):
            raise ValueError("phi, psi1 and psi2 must live on the same grid")

    def with_eps(self, eps: float) -> "LevelSetState":
        return replace(self, eps=eps)

    def coefficient(self) -> np.ndarray:
        """``P_eps(phi, psi1, psi2)``."""
        return project(self.phi, self.psi1, self.psi2, self.eps)


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")


def heaviside(t):
    """Sharp Heaviside: 1 where ``t > 0``, 0 elsewhere."""
    return np.where(np.asarray(t) > 0, 1.0, 0.0)


def heaviside_smooth(t, eps: float):
    """Piecewise-linear Heaviside: ramps from 0 at ``t = -eps`` to 1 at ``t = 0``."""
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    out = np.clip(1.0 + t / eps, 0.0, 1.0)
    return out if out.ndim else float(out)


def heaviside_smooth_deriv(t, eps: float):
    """``1/eps`` on the open band ``(-eps, 0)``, zero elsewhere."""
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    out = np.where((t > -eps) & (t < 0.0), 1.0 / eps, 0.0)
    return out if out.ndim else float(out)


def apply_q(z: np.ndarray, psi1: np.ndarray, psi2: np.ndarray) -> np.ndarray:
    """Pointwise convex combination ``psi1*z + psi2*(1 - z)``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < -Z_TOL) or np.any(z > 1.0 + Z_TOL):
        raise ValueError("indicator z must take values in [0, 1]")
    return psi1 * z + psi2 * (1.0 - z)


def project(phi: np.ndarray, psi1: np.ndarray, psi2: np.ndarray, eps: float | None) -> np.ndarray:
    """``P_eps`` for ``eps > 0``; the sharp projector ``P`` when ``eps`` is None."""
    z = heaviside(phi) if eps is None else heaviside_smooth(phi, eps)
    return apply_q(z, psi1, psi2)


def clamp_to_box(f: np.ndarray, box: AdmissibleBox) -> np.ndarray:
    return np.clip(f, box.m, box.M)


def evaluate_R(state: LevelSetState, phi0: np.ndarray, psi0_1: np.ndarray, psi0_2: np.ndarray,
               betas: tuple[float, float, float], beta_tv: float, grid: Grid2D):
    """Smoothed regularization functional.

    Returns ``(total, (tv_shape, h1_phi, tv_levels))`` where the parts are
    already weighted by ``beta1``, ``beta2`` and ``beta3`` respectively.
    """
    b1, b2, b3 = betas
    if min(betas) < 0:
        raise ValueError(f"regularization weights must be non-negative, got {betas}")
    for f in (phi0, psi0_1, psi0_2):
        grid.check(f)
    tv_shape = b1 * norm(heaviside_smooth(state.phi, state.eps), grid, "TV", beta_tv)
    h1 = b2 * norm(state.phi - phi0, grid, "H1") ** 2
    tv_levels = b3 * (norm(state.psi1 - psi0_1, grid, "TV", beta_tv)
                      + norm(state.psi2 - psi0_2, grid, "TV", beta_tv))
    return tv_shape + h1 + tv_levels, (tv_shape, h1, tv_levels)
