"""Space-time fields and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["SpaceTimeField", "write_field_csv", "fmt"]


def fmt(x):
    """17-significant-digit text for floats; round-trips exactly."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Scalar values on every node of ``grid`` at every stored time level.

    ``values`` has shape ``grid.shape``.  NaN marks nodes where a derived
    quantity was not evaluated (face nodes of a weighted derivative,
    boundary nodes of a residual, stencil margins of a difference).
    """

    grid: object
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(coords, t)`` at every node; coords is a sparse meshgrid."""
        coords = grid.mesh()
        values = np.empty(grid.shape)
        for m, t in enumerate(grid.time_axis):
            values[m] = np.broadcast_to(func(coords, float(t)), grid.spatial_shape)
        return cls(grid, values)

    @classmethod
    def constant_in_time(cls, grid, spatial):
        spatial = np.asarray(spatial, dtype=float)
        return cls(grid, np.broadcast_to(spatial, grid.shape).copy())

    def level(self, m):
        return self.values[m]

    def evaluated(self):
        """Boolean mask of non-sentinel nodes."""
        return np.isfinite(self.values)

    def max_abs(self, mask=None):
        v = self.values if mask is None else self.values[mask]
        v = v[np.isfinite(v)]
        return float(np.max(np.abs(v))) if v.size else 0.0


def write_field_csv(path, field, levels=None):
    """One row per node: coordinates, t, value."""
    grid = field.grid
    names = [f"x{i + 1}" for i in range(grid.n_dims)]
    levels = range(grid.shape[0]) if levels is None else levels
    coords = np.meshgrid(*grid.axes, indexing="ij")
    flat = [c.ravel() for c in coords]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["t", "value"])
        for m in levels:
            t = grid.time_axis[m]
            vals = field.values[m].ravel()
            for k in range(vals.size):
                w.writerow([fmt(c[k]) for c in flat] + [fmt(t), fmt(vals[k])])
