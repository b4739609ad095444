"""
Closed-form solutions of u_t - x_n^gamma Lap u = f and the discrete defect.

Two families, both with a free linear part l(x):

    phi = l(x) + 2 t + x_n^(2-gamma) / ((2-gamma)(1-gamma))      (f = 1)
    psi = l(x) + t x_n + x_n^(3-gamma) / ((3-gamma)(2-gamma))    (f = 0)

phi is the C^{1,1-gamma} worst case for the inhomogeneous problem and psi
the C^{2,1-gamma} worst case for the homogeneous one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import SpaceTimeField
from .stencils import discrete_laplacian

__all__ = [
    "LinearPart",
    "ExactSolution",
    "eval_phi",
    "eval_psi",
    "operator_residual",
    "source_level",
]

KINDS = ("phi", "psi")


@dataclass(frozen=True)
class LinearPart:
    gradient: tuple = ()
    offset: float = 0.0

    def __post_init__(self):
        g = tuple(float(v) for v in self.gradient)
        if not all(np.isfinite(g)) or not np.isfinite(self.offset):
            raise ValueError("linear part must be finite")
        object.__setattr__(self, "gradient", g)

    def __call__(self, coords):
        out = self.offset
        for c, g in zip(coords, self.gradient):
            if g:
                out = out + g * c
        return out


@dataclass(frozen=True)
class ExactSolution:
    """One of the two closed-form families; callable as ``sol(coords, t)``."""

    kind: str
    gamma: float
    linear_part: LinearPart = field(default_factory=LinearPart)

    def __post_init__(self):
        aliases = {"phi_inhomogeneous": "phi", "psi_homogeneous": "psi"}
        kind = aliases.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown exact solution {self.kind!r}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma out of (0,1): {self.gamma!r}")
        object.__setattr__(self, "kind", kind)

    @property
    def source(self):
        """The constant right-hand side this family solves."""
        return 1.0 if self.kind == "phi" else 0.0

    def __call__(self, coords, t):
        xn = np.asarray(coords[-1], dtype=float)
        if np.any(xn < 0):
            raise ValueError("x_n must be nonnegative")
        g = self.gamma
        lin = self.linear_part(coords)
        if self.kind == "phi":
            return lin + 2.0 * t + xn ** (2 - g) / ((2 - g) * (1 - g))
        return lin + t * xn + xn ** (3 - g) / ((3 - g) * (2 - g))

    def time_derivative(self, coords, t):
        xn = np.asarray(coords[-1], dtype=float)
        if self.kind == "phi":
            return np.full_like(xn, 2.0)
        return xn.copy()

    def laplacian(self, coords, t):
        """Continuous Laplacian; x_n^-gamma for phi, x_n^(1-gamma) for psi."""
        xn = np.asarray(coords[-1], dtype=float)
        with np.errstate(divide="ignore"):
            if self.kind == "phi":
                return xn ** (-self.gamma)
            return xn ** (1 - self.gamma)

    @classmethod
    def from_dict(cls, d, gamma):
        lin = LinearPart(tuple(d.get("gradient", ())), float(d.get("offset", 0.0)))
        return cls(d["kind"], gamma, lin)

    def to_dict(self):
        return {
            "kind": self.kind,
            "gradient": list(self.linear_part.gradient),
            "offset": self.linear_part.offset,
        }


def _point_coords(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    return tuple(np.moveaxis(x, -1, 0))


def _eval(kind, spec, x, t):
    if spec.kind != kind:
        spec = ExactSolution(kind, spec.gamma, spec.linear_part)
    out = spec(_point_coords(x), t)
    return float(out) if np.ndim(out) == 0 else out


def eval_phi(spec, x, t):
    """Evaluate the inhomogeneous worst case at point(s) ``x`` (last axis n)."""
    return _eval("phi", spec, x, t)


def eval_psi(spec, x, t):
    """Evaluate the homogeneous worst case at point(s) ``x`` (last axis n)."""
    return _eval("psi", spec, x, t)


def source_level(f, grid, m, coords=None):
    """Values of a source at time level ``m``, broadcast to the spatial shape.

    ``f`` may be a number, a callable ``f(coords, t)``, an array of the full
    field shape, or any object with a ``level(grid, m)`` method.
    """
    if hasattr(f, "level"):
        return f.level(grid, m)
    if callable(f):
        coords = grid.mesh() if coords is None else coords
        val = f(coords, float(grid.time_axis[m]))
        return np.broadcast_to(np.asarray(val, dtype=float), grid.spatial_shape)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return np.broadcast_to(arr, grid.spatial_shape)
    if arr.shape != grid.shape:
        raise ValueError(f"tabulated source shape {arr.shape} does not match grid {grid.shape}")
    return arr[m]


def operator_residual(field, grid, f=0.0, convention="backward"):
    """Discrete defect of u_t - x_n^gamma Lap_h u - f.

    ``convention='backward'`` evaluates level m >= 1 with (u^m - u^(m-1))/dt
    and the Laplacian at level m, matching the implicit stepper.
    ``'forward'`` evaluates level m < M with (u^(m+1) - u^m)/dt and the
    Laplacian at level m, matching the explicit stepper.  Face, lateral and
    non-evaluated levels hold NaN.
    """
    if field.grid.shape != grid.shape:
        raise ValueError("field and grid shapes differ")
    if grid.shape[0] < 2:
        raise ValueError("residual needs at least two time levels")
    if convention not in ("backward", "forward"):
        raise ValueError(f"unknown convention {convention!r}")
    u = field.values
    dt = grid.dt
    weight = grid.normal_coordinate() ** grid.gamma
    coords = grid.mesh()
    out = np.full(grid.shape, np.nan)
    n_levels = grid.shape[0]
    levels = range(1, n_levels) if convention == "backward" else range(n_levels - 1)
    for m in levels:
        if convention == "backward":
            ut = (u[m] - u[m - 1]) / dt
        else:
            ut = (u[m + 1] - u[m]) / dt
        lap = discrete_laplacian(u[m], grid)
        out[m] = ut - weight * lap - source_level(f, grid, m, coords)
    return SpaceTimeField(grid, out)
