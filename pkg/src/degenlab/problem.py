"""
Problem data for the Cauchy-Dirichlet problem on the half-box.

Data is split three ways: the source f, the face data g on x_n = 0, and the
exterior data covering the lateral walls, the top x_n = 1 and the initial
level.  Everything is evaluated by time value so explicit and implicit
steppers can ask for data at t or t + dt.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exact import ExactSolution

__all__ = [
    "Source",
    "FaceData",
    "ExteriorData",
    "ProblemConfig",
    "DataMismatchError",
    "compatibility_warning",
]

EDGE_TOL = 1e-10


class DataMismatchError(ValueError):
    """Initial, face and exterior data disagree where they meet."""


def _level_index(grid, t):
    m = int(np.argmin(np.abs(grid.time_axis - t)))
    if abs(grid.time_axis[m] - t) > 1e-9 * max(1.0, abs(grid.t_start)):
        raise ValueError(f"tabulated data has no level at t={t!r}")
    return m


def _check_table(table, grid):
    if table is None:
        raise ValueError("tabulated data needs a table")
    if np.shape(table) != grid.shape:
        raise ValueError(f"table shape {np.shape(table)} does not match grid {grid.shape}")


@dataclass(frozen=True, eq=False)
class Source:
    """Right-hand side f: ``constant``, ``callable`` or ``tabulated``."""

    kind: str = "constant"
    value: float = 0.0
    func: Optional[Callable] = None
    table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("constant", "callable", "tabulated"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "callable" and self.func is None:
            raise ValueError("callable source needs func")

    def at(self, grid, t, coords=None):
        if self.kind == "constant":
            return np.full(grid.spatial_shape, float(self.value))
        if self.kind == "callable":
            coords = grid.mesh() if coords is None else coords
            val = np.asarray(self.func(coords, t), dtype=float)
            return np.broadcast_to(val, grid.spatial_shape).copy()
        _check_table(self.table, grid)
        return np.array(self.table[_level_index(grid, t)], dtype=float)

    def level(self, grid, m):
        return self.at(grid, float(grid.time_axis[m]))

    @property
    def is_zero(self):
        if self.kind == "constant":
            return self.value == 0.0
        if self.kind == "tabulated":
            return not np.any(self.table)
        return False

    def scale(self, grid):
        return max(float(np.max(np.abs(self.level(grid, m)))) for m in range(grid.shape[0]))


@dataclass(frozen=True, eq=False)
class FaceData:
    """Dirichlet data g on the face x_n = 0.

    Kinds: ``zero``; ``linear`` (offset + gradient . x'); ``power``
    (coefficient |x'|^(1+beta)); ``exact`` (trace of a closed-form
    solution); ``tabulated`` (face slice of a full-shape table).
    """

    kind: str = "zero"
    offset: float = 0.0
    gradient: tuple = ()
    beta: Optional[float] = None
    coefficient: float = 1.0
    exact: Optional[ExactSolution] = None
    table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        kinds = ("zero", "linear", "power", "exact", "tabulated")
        if self.kind not in kinds:
            raise ValueError(f"unknown face data kind {self.kind!r}")
        if self.kind == "power":
            if self.beta is None or not 0 < self.beta < 1:
                raise ValueError(f"beta out of (0,1): {self.beta!r}")
        if self.kind == "exact" and self.exact is None:
            raise ValueError("exact face data needs an ExactSolution")

    def at(self, grid, t):
        """Face values, shape ``spatial_shape[:-1]`` (a scalar array for n = 1)."""
        face_shape = grid.spatial_shape[:-1]
        tan = np.meshgrid(*grid.tangential_axes, indexing="ij", sparse=True)
        if self.kind == "zero":
            return np.zeros(face_shape)
        if self.kind == "linear":
            out = np.full(face_shape, float(self.offset))
            for c, g in zip(tan, self.gradient):
                out = out + g * c
            return np.broadcast_to(out, face_shape).copy()
        if self.kind == "power":
            r2 = sum(c * c for c in tan) if tan else np.zeros(face_shape)
            r = np.sqrt(np.broadcast_to(r2, face_shape))
            return self.coefficient * r ** (1.0 + self.beta)
        if self.kind == "exact":
            coords = tuple(tan) + (np.zeros((1,) * (grid.n_dims - 1) or ()),)
            val = self.exact(coords, t)
            return np.broadcast_to(val, face_shape).copy()
        _check_table(self.table, grid)
        return np.array(self.table[_level_index(grid, t)][..., 0], dtype=float)

    def time_independent(self, grid):
        if self.kind in ("zero", "linear", "power"):
            return True
        if self.kind == "exact":
            return self.exact.kind == "psi"
        g0 = self.at(grid, float(grid.time_axis[0]))
        return all(
            np.allclose(self.at(grid, float(t)), g0, rtol=0, atol=1e-12) for t in grid.time_axis
        )


@dataclass(frozen=True, eq=False)
class ExteriorData:
    """Data on the lateral walls, the top x_n = 1 and the initial level.

    Kinds: ``extend`` (face data carried constantly in x_n); ``zero``;
    ``exact``; ``tabulated``.  ``bump`` adds
    bump * prod cos(pi x_i / 2) * sin(pi x_n) to the initial level only;
    it vanishes on the whole parabolic boundary so compatibility is kept.
    """

    kind: str = "extend"
    exact: Optional[ExactSolution] = None
    table: Optional[np.ndarray] = field(default=None, repr=False)
    bump: float = 0.0

    def __post_init__(self):
        if self.kind not in ("extend", "zero", "exact", "tabulated"):
            raise ValueError(f"unknown exterior kind {self.kind!r}")
        if self.kind == "exact" and self.exact is None:
            raise ValueError("exact exterior data needs an ExactSolution")


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    gamma: float
    source: Source = field(default_factory=Source)
    face: FaceData = field(default_factory=FaceData)
    exterior: ExteriorData = field(default_factory=ExteriorData)
    scheme: str = "implicit"
    cfl_safety: float = 0.9
    linear_solve_tolerance: float = 1e-12

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma out of (0,1): {self.gamma!r}")
        if self.scheme not in ("explicit", "implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety out of (0,1]: {self.cfl_safety!r}")
        if not self.linear_solve_tolerance > 0:
            raise ValueError("linear_solve_tolerance must be positive")

    def replace(self, **changes):
        return replace(self, **changes)

    @classmethod
    def from_exact(cls, exact, **kw):
        """Manufactured problem: source, face and exterior all from ``exact``."""
        return cls(
            gamma=exact.gamma,
            source=Source("constant", exact.source),
            face=FaceData("exact", exact=exact),
            exterior=ExteriorData("exact", exact=exact),
            **kw,
        )

    def exterior_values(self, grid, t, coords=None):
        """Full spatial slice of exterior data at time ``t`` (no bump)."""
        ext = self.exterior
        if ext.kind == "zero":
            return np.zeros(grid.spatial_shape)
        if ext.kind == "extend":
            g = self.face.at(grid, t)
            return np.broadcast_to(g[..., None], grid.spatial_shape).copy()
        if ext.kind == "exact":
            coords = grid.mesh() if coords is None else coords
            return np.broadcast_to(ext.exact(coords, t), grid.spatial_shape).copy()
        _check_table(ext.table, grid)
        return np.array(ext.table[_level_index(grid, t)], dtype=float)

    def boundary_values(self, grid, t, coords=None):
        """Slice holding Dirichlet values at time ``t``; face overrides exterior."""
        out = self.exterior_values(grid, t, coords)
        out[..., 0] = self.face.at(grid, t)
        return out

    def initial_values(self, grid, coords=None):
        t0 = float(grid.time_axis[0])
        out = self.exterior_values(grid, t0, coords)
        if self.exterior.bump:
            coords = grid.mesh() if coords is None else coords
            bump = np.sin(np.pi * coords[-1])
            for c in coords[:-1]:
                bump = bump * np.cos(0.5 * np.pi * c)
            out = out + self.exterior.bump * bump
        return out

    def check_compatibility(self, grid):
        """Reject data that disagrees on shared edges by more than 1e-10."""
        coords = grid.mesh()
        init = self.initial_values(grid, coords)
        g0 = self.face.at(grid, float(grid.time_axis[0]))
        if np.max(np.abs(init[..., 0] - g0), initial=0.0) > EDGE_TOL:
            raise DataMismatchError("initial data disagrees with face data at t_start")
        if grid.n_dims == 1:
            return
        for t in grid.time_axis:
            ext = self.exterior_values(grid, float(t), coords)[..., 0]
            g = self.face.at(grid, float(t))
            edge = np.zeros(g.shape, dtype=bool)
            for axis in range(grid.n_dims - 1):
                idx = [slice(None)] * (grid.n_dims - 1)
                idx[axis] = 0
                edge[tuple(idx)] = True
                idx[axis] = -1
                edge[tuple(idx)] = True
            if np.max(np.abs(ext[edge] - g[edge]), initial=0.0) > EDGE_TOL:
                raise DataMismatchError(f"lateral data disagrees with face data at t={t:g}")

    def dirichlet_table(self, grid):
        """Level 0 holds initial data, later levels the boundary values."""
        coords = grid.mesh()
        table = np.empty(grid.shape)
        table[0] = self.initial_values(grid, coords)
        for m in range(1, grid.shape[0]):
            table[m] = self.boundary_values(grid, float(grid.time_axis[m]), coords)
        return table

    def source_table(self, grid):
        coords = grid.mesh()
        return np.stack([self.source.at(grid, float(t), coords) for t in grid.time_axis])


def compatibility_warning(config, grid):
    """Warn when a homogeneous problem has face data with g_t != 0.

    A C^2 solution of the homogeneous equation forces g_t = 0 on the face,
    since |u_t| <= x_n^gamma |Lap u| there.
    """
    if config.source.is_zero and not config.face.time_independent(grid):
        warnings.warn(
            "homogeneous problem with time-dependent face data: g_t != 0 on the face, "
            "so no C^2 solution exists up to x_n = 0",
            RuntimeWarning,
            stacklevel=3,
        )
        return True
    return False
