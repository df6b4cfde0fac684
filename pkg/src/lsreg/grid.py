"""Uniform 2D grids, nodal fields and the discrete operators built on them.

Fields are plain ``numpy`` arrays of shape ``(ny, nx)``; index ``[j, i]``
addresses the node at ``(x0 + i*hx, y0 + j*hy)``, so the flattened array is
row-major with x varying fastest.  Boundary traces are 1D arrays with one
entry per boundary node, ordered counter-clockwise starting at ``(x0, y0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid2D",
    "VectorField",
    "gradient",
    "divergence",
    "laplacian",
    "curvature_div",
    "norm",
    "inner",
    "boundary_trace",
    "boundary_inner",
    "boundary_norm",
    "embed_trace",
    "normal_derivative",
]


@dataclass(frozen=True)
class Grid2D:
    """Node-centred tensor grid on the rectangle ``[x0, x1] x [y0, y1]``."""

    nx: int
    ny: int
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"grid needs at least 3 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("grid extents must satisfy x1 > x0 and y1 > y0")

    @classmethod
    def unit(cls, n: int) -> "Grid2D":
        """``n x n`` nodes on the unit square."""
        return cls(n, n)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def n_boundary(self) -> int:
        return 2 * (self.nx - 1) + 2 * (self.ny - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodal coordinate arrays ``(X, Y)``, each of shape ``(ny, nx)``."""
        X, Y = np.meshgrid(self.x, self.y)
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights on the nodes."""
        wx = np.full(self.nx, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.hy)
        wy[[0, -1]] *= 0.5
        w = np.outer(wy, wx)
        w.flags.writeable = False
        return w

    @cached_property
    def boundary_rows(self) -> np.ndarray:
        """Row (y) index of every boundary node in canonical order."""
        return self._boundary_ij[0]

    @cached_property
    def boundary_cols(self) -> np.ndarray:
        """Column (x) index of every boundary node in canonical order."""
        return self._boundary_ij[1]

    @cached_property
    def _boundary_ij(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.nx, self.ny
        i = np.concatenate([
            np.arange(0, nx - 1),              # bottom, left to right
            np.full(ny - 1, nx - 1),           # right, bottom to top
            np.arange(nx - 1, 0, -1),          # top, right to left
            np.zeros(ny - 1, dtype=int),       # left, top to bottom
        ])
        j = np.concatenate([
            np.zeros(nx - 1, dtype=int),
            np.arange(0, ny - 1),
            np.full(nx - 1, ny - 1),
            np.arange(ny - 1, 0, -1),
        ])
        return j, i

    @cached_property
    def boundary_flat(self) -> np.ndarray:
        """Flat (row-major) node index of every boundary node."""
        return self.boundary_rows * self.nx + self.boundary_cols

    @cached_property
    def interior_flat(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
        return np.flatnonzero(mask)

    @cached_property
    def arclength(self) -> np.ndarray:
        """Arc-length parameter of each boundary node, starting at ``(x0, y0)``."""
        X, Y = self.coords
        px = X[self.boundary_rows, self.boundary_cols]
        py = Y[self.boundary_rows, self.boundary_cols]
        seg = np.hypot(np.diff(px), np.diff(py))
        return np.concatenate([[0.0], np.cumsum(seg)])

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        """Trapezoidal weights along the closed boundary curve."""
        X, Y = self.coords
        px = X[self.boundary_rows, self.boundary_cols]
        py = Y[self.boundary_rows, self.boundary_cols]
        seg = np.hypot(np.diff(px, append=px[0]), np.diff(py, append=py[0]))
        w = 0.5 * (seg + np.roll(seg, 1))
        w.flags.writeable = False
        return w

    @cached_property
    def normal_derivative_matrix(self) -> sp.csr_matrix:
        """Sparse map from a flattened field to its outward normal derivative trace."""
        nx, ny, hx, hy = self.nx, self.ny, self.hx, self.hy
        rows, cols, vals = [], [], []

        def add(k, j, i, dj, di, h, scale):
            # 3f_b - 4f_{b-1} + f_{b-2}, stepping inward by (dj, di)
            for step, c in ((0, 3.0), (1, -4.0), (2, 1.0)):
                rows.append(k)
                cols.append((j + step * dj) * nx + (i + step * di))
                vals.append(scale * c / (2.0 * h))

        for k, (j, i) in enumerate(zip(self.boundary_rows, self.boundary_cols)):
            sides = []
            if j == 0:
                sides.append((1, 0, hy))
            if j == ny - 1:
                sides.append((-1, 0, hy))
            if i == 0:
                sides.append((0, 1, hx))
            if i == nx - 1:
                sides.append((0, -1, hx))
            scale = 1.0 / len(sides)
            for dj, di, h in sides:
                add(k, j, i, dj, di, h, scale)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_boundary, self.size))

    def check(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f

    def check_trace(self, t: np.ndarray, name: str = "trace") -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.shape != (self.n_boundary,):
            raise ValueError(f"{name} has length {t.shape}, grid expects ({self.n_boundary},)")
        return t

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))


class VectorField(NamedTuple):
    x: np.ndarray
    y: np.ndarray


def gradient(f: np.ndarray, grid: Grid2D) -> VectorField:
    """Central differences inside, second-order one-sided differences on the boundary."""
    f = grid.check(f)
    fy, fx = np.gradient(f, grid.hy, grid.hx, edge_order=2)
    return VectorField(fx, fy)


def divergence(v: VectorField, grid: Grid2D) -> np.ndarray:
    vx = grid.check(v[0], "x component")
    vy = grid.check(v[1], "y component")
    return (np.gradient(vx, grid.hx, axis=1, edge_order=2)
            + np.gradient(vy, grid.hy, axis=0, edge_order=2))


def laplacian(f: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Five-point Laplacian; boundary rows use mirrored ghost nodes (zero normal flux)."""
    f = grid.check(f)
    p = np.pad(f, 1, mode="reflect")
    return ((p[1:-1, 2:] - 2.0 * f + p[1:-1, :-2]) / grid.hx**2
            + (p[2:, 1:-1] - 2.0 * f + p[:-2, 1:-1]) / grid.hy**2)


def curvature_div(f: np.ndarray, grid: Grid2D, beta_tv: float) -> np.ndarray:
    """``div(grad f / sqrt(|grad f|^2 + beta_tv^2))``."""
    if not beta_tv > 0:
        raise ValueError(f"beta_tv must be positive, got {beta_tv}")
    g = gradient(f, grid)
    q = np.sqrt(g.x**2 + g.y**2 + beta_tv**2)
    return divergence(VectorField(g.x / q, g.y / q), grid)


def inner(f: np.ndarray, g: np.ndarray, grid: Grid2D) -> float:
    """Trapezoidal L2(Omega) inner product."""
    return float(np.sum(grid.weights * grid.check(f) * grid.check(g)))


def norm(f: np.ndarray, grid: Grid2D, kind: str = "L2", beta_tv: float | None = None) -> float:
    """Grid norm of ``f``.

    ``kind`` is one of ``"L1"``, ``"L2"``, ``"H1"`` (full norm) or ``"TV"``;
    the TV seminorm is smoothed as ``sum (sqrt(|grad f|^2 + beta^2) - beta)``
    so that constants have zero variation, and requires ``beta_tv``.
    """
    f = grid.check(f)
    w = grid.weights
    kind = kind.upper()
    if kind == "L1":
        return float(np.sum(w * np.abs(f)))
    if kind == "L2":
        return float(np.sqrt(np.sum(w * f * f)))
    if kind == "H1":
        g = gradient(f, grid)
        return float(np.sqrt(np.sum(w * (f * f + g.x**2 + g.y**2))))
    if kind == "TV":
        if beta_tv is None or beta_tv < 0:
            raise ValueError("TV norm needs a non-negative beta_tv")
        g = gradient(f, grid)
        return float(np.sum(w * (np.sqrt(g.x**2 + g.y**2 + beta_tv**2) - beta_tv)))
    raise ValueError(f"unknown norm kind {kind!r}")


def boundary_trace(f: np.ndarray, grid: Grid2D) -> np.ndarray:
    f = grid.check(f)
    return f[grid.boundary_rows, grid.boundary_cols].copy()


def embed_trace(trace: np.ndarray, grid: Grid2D, interior: np.ndarray | float = 0.0) -> np.ndarray:
    """Field whose boundary nodes carry ``trace``; interior nodes take ``interior``."""
    trace = grid.check_trace(trace)
    out = np.broadcast_to(np.asarray(interior, dtype=float), grid.shape).copy()
    out[grid.boundary_rows, grid.boundary_cols] = trace
    return out


def normal_derivative(f: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Outward normal derivative on the boundary (corners average both sides)."""
    f = grid.check(f)
    return grid.normal_derivative_matrix @ f.ravel()


def boundary_inner(a: np.ndarray, b: np.ndarray, grid: Grid2D) -> float:
    """Trapezoidal L2(boundary) inner product."""
    return float(np.sum(grid.boundary_weights * grid.check_trace(a) * grid.check_trace(b)))


def boundary_norm(a: np.ndarray, grid: Grid2D) -> float:
    return float(np.sqrt(boundary_inner(a, a, grid)))
