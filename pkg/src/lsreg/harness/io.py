"""CSV and JSON artifacts.

Grid CSV: header ``x,y,value``, one row per node in row-major order (x
fastest).  Trace CSV: header ``s,value`` with ``s`` the arc-length parameter
of the counter-clockwise boundary walk.  Numbers are written with 17
significant digits so that every float64 round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..grid import Grid2D

__all__ = ["write_field_csv", "read_field_csv", "write_trace_csv", "read_trace_csv", "write_json"]

FMT = "%.17g"


def write_field_csv(path: str | Path, field: np.ndarray, grid: Grid2D) -> None:
    field = grid.check(field, "field")
    X, Y = grid.coords
    table = np.column_stack([X.ravel(), Y.ravel(), field.ravel()])
    np.savetxt(path, table, fmt=FMT, delimiter=",", header="x,y,value", comments="")


def read_field_csv(path: str | Path, grid: Grid2D | None = None) -> np.ndarray:
    """Read a grid CSV back into an ``(ny, nx)`` array.

    Without ``grid`` the shape is inferred from the distinct x and y values.
    """
    table = _read_table(path, "x,y,value", 3)
    if grid is not None:
        shape = grid.shape
    else:
        shape = (np.unique(table[:, 1]).size, np.unique(table[:, 0]).size)
    if table.shape[0] != shape[0] * shape[1]:
        raise ValueError(f"{path}: expected {shape[0] * shape[1]} rows, found {table.shape[0]}")
    return table[:, 2].reshape(shape)


def write_trace_csv(path: str | Path, trace: np.ndarray, grid: Grid2D) -> None:
    trace = grid.check_trace(trace, "trace")
    table = np.column_stack([grid.arclength, trace])
    np.savetxt(path, table, fmt=FMT, delimiter=",", header="s,value", comments="")


def read_trace_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(s, value)`` from a trace CSV."""
    table = _read_table(path, "s,value", 2)
    return table[:, 0], table[:, 1]


def _read_table(path, header, ncols):
    with open(path) as fh:
        first = fh.readline().strip()
        if first != header:
            raise ValueError(f"{path}: expected header {header!r}, found {first!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape[1] != ncols:
        raise ValueError(f"{path}: expected {ncols} columns, found {table.shape[1]}")
    return table


def write_json(path: str | Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
