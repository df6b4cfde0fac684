"""Synthetic coefficients ``u = psi1 * H(phi) + psi2 * (1 - H(phi))``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grid import Grid2D
from ..levelset import AdmissibleBox, LevelSetState, heaviside

SHAPES = ("disk", "two_disks", "square")
LAWS = ("constant", "ramp_x", "ramp_y", "radial")


@dataclass(frozen=True)
class Law:
    """Spatial law for a level function.

    ``constant`` uses ``a`` only; the ramps go linearly from ``a`` to ``b``
    across the domain; ``radial`` goes from ``a`` at the domain centre to
    ``b`` at the corners.
    """

    kind: str
    a: float
    b: float | None = None

    def __post_init__(self):
        if self.kind not in LAWS:
            raise ValueError(f"unknown law {self.kind!r}, expected one of {LAWS}")
        if self.kind != "constant" and self.b is None:
            raise ValueError(f"law {self.kind!r} needs both a and b")

    @property
    def range(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.a, self.a
        return min(self.a, self.b), max(self.a, self.b)

    def evaluate(self, grid: Grid2D) -> np.ndarray:
        X, Y = grid.coords
        if self.kind == "constant":
            return grid.full(self.a)
        if self.kind == "ramp_x":
            t = (X - grid.x0) / (grid.x1 - grid.x0)
        elif self.kind == "ramp_y":
            t = (Y - grid.y0) / (grid.y1 - grid.y0)
        else:
            cx, cy = 0.5 * (grid.x0 + grid.x1), 0.5 * (grid.y0 + grid.y1)
            r = np.hypot(X - cx, Y - cy)
            t = r / np.hypot(grid.x1 - cx, grid.y1 - cy)
        return self.a + (self.b - self.a) * t


@dataclass(frozen=True)
class PhantomSpec:
    shape: str = "disk"
    centers: tuple[tuple[float, float], ...] = ((0.5, 0.5),)
    radii: tuple[float, ...] = (0.3,)
    psi1: Law = field(default_factory=lambda: Law("constant", 2.0))
    psi2: Law = field(default_factory=lambda: Law("constant", 1.0))
    box: AdmissibleBox = field(default_factory=lambda: AdmissibleBox(0.5, 3.5))

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}, expected one of {SHAPES}")
        need = 2 if self.shape == "two_disks" else 1
        if len(self.centers) != need or len(self.radii) != need:
            raise ValueError(f"shape {self.shape!r} needs {need} center(s) and radius/radii")
        if min(self.radii) <= 0:
            raise ValueError("radii must be positive")
        for law, name in ((self.psi1, "psi1"), (self.psi2, "psi2")):
            lo, hi = law.range
            if lo < self.box.m or hi > self.box.M:
                raise ValueError(f"{name} law range [{lo}, {hi}] leaves the box "
                                 f"[{self.box.m}, {self.box.M}]")

    def signed_distance(self, grid: Grid2D) -> np.ndarray:
        """Signed distance to the shape boundary, positive inside."""
        X, Y = grid.coords
        parts = []
        for (cx, cy), r in zip(self.centers, self.radii):
            # checks D is compactly contained in the domain
            if (cx - r <= grid.x0 or cx + r >= grid.x1 or cy - r <= grid.y0 or cy + r >= grid.y1):
                raise ValueError(f"shape at ({cx}, {cy}) with size {r} is not strictly inside the domain")
            if self.shape == "square":
                qx, qy = np.abs(X - cx) - r, np.abs(Y - cy) - r
                outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
                parts.append(-(outside + np.minimum(np.maximum(qx, qy), 0.0)))
            else:
                parts.append(r - np.hypot(X - cx, Y - cy))
        return np.max(parts, axis=0)


def reference_phantom(box: AdmissibleBox | None = None) -> PhantomSpec:
    """Disk of radius 0.3 with ramp levels ``2..3`` (along x) inside and ``1..1.5`` (along y) outside."""
    return PhantomSpec("disk", ((0.5, 0.5),), (0.3,), Law("ramp_x", 2.0, 3.0), Law("ramp_y", 1.0, 1.5),
                       box or AdmissibleBox(0.5, 3.5))


def make_phantom(spec: PhantomSpec, grid: Grid2D, eps: float | None = None):
    """Return ``(u_true, state_true)``; ``u_true`` uses the sharp Heaviside."""
    phi = spec.signed_distance(grid)
    psi1 = spec.psi1.evaluate(grid)
    psi2 = spec.psi2.evaluate(grid)
    H = heaviside(phi)
    u = psi1 * H + psi2 * (1.0 - H)
    state = LevelSetState(phi, psi1, psi2, eps if eps is not None else 2.0 * grid.h)
    return u, state
