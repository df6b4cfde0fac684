"""Additive noise normalized to an exact relative level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import Grid2D, boundary_norm


@dataclass(frozen=True)
class NoiseSpec:
    delta_rel: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.delta_rel < 0:
            raise ValueError("delta_rel must be non-negative")


def add_noise(y: np.ndarray, spec: NoiseSpec, grid: Grid2D):
    """Return ``(y_delta, delta_abs)`` with ``||y_delta - y|| = delta_rel * ||y||`` exactly.

    Norms are the trapezoidal ``L2`` norm on the boundary.  The direction is
    drawn from seeded standard normals, so a fixed seed reproduces ``y_delta``
    bit for bit.
    """
    y = grid.check_trace(y, "data")
    if spec.delta_rel == 0:
        return y.copy(), 0.0
    ynorm = boundary_norm(y, grid)
    if ynorm == 0:
        raise ValueError("cannot scale relative noise on zero data")
    xi = np.random.default_rng(spec.seed).standard_normal(y.size)
    delta_abs = spec.delta_rel * ynorm
    return y + delta_abs * xi / boundary_norm(xi, grid), delta_abs
