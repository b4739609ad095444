"""
Fixed-time-slice Poisson problems.

For a homogeneous solution each time slice v = u(., t) solves
Lap v = x_n^-gamma u_t(., t), so a parabolic field can be checked slice
by slice against an elliptic solve.  The same solver gives the elliptic
limit x_n^gamma Lap u = -f of a steady problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linsolve import RefinedSolver
from .stencils import discrete_laplacian, laplacian_matrix

__all__ = [
    "SliceProblem",
    "SliceReport",
    "solve_poisson",
    "slice_time_derivative",
    "slice_consistency",
    "reproduce_slice",
    "weighted_rhs",
    "solve_steady",
]


@dataclass(frozen=True, eq=False)
class SliceProblem:
    """Lap w = rhs at interior nodes, w = boundary at boundary nodes."""

    grid: object
    rhs: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    tolerance: float = 1e-8

    def __post_init__(self):
        shape = self.grid.spatial_shape
        rhs = np.broadcast_to(np.asarray(self.rhs, dtype=float), shape)
        bnd = np.broadcast_to(np.asarray(self.boundary, dtype=float), shape)
        interior = ~self.grid.boundary_mask()
        if not np.all(np.isfinite(rhs[interior])):
            raise ValueError("rhs must be finite at interior nodes")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "boundary", bnd)


_cache = {}


def _poisson_solver(grid, tolerance):
    key = (id(grid), tolerance)
    hit = _cache.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    L = laplacian_matrix(grid)
    bmask = grid.boundary_mask().ravel()
    A = (L + sp.diags(bmask.astype(float))).tocsr()
    solver = RefinedSolver(A, tolerance, scaled=True)
    _cache.clear()
    _cache[key] = (grid, solver)
    return solver


def solve_poisson(problem):
    """Solve the slice problem; raises LinearSolveError if the residual stalls above tolerance.

    The residual is the max-norm of (Lap_h w - rhs) / c over interior nodes,
    with c the stencil center weight, i.e. the size of the pointwise
    correction a further sweep would make.  The raw Laplacian residual
    scales like 1/h^2 near the face and has a rounding floor far above
    any useful absolute tolerance on graded grids.
    """
    grid = problem.grid
    bmask = grid.boundary_mask()
    b = np.where(bmask, problem.boundary, problem.rhs).ravel()
    solver = _poisson_solver(grid, problem.tolerance)
    w = solver.solve(b).reshape(grid.spatial_shape)
    w[bmask] = problem.boundary[bmask]
    return w


def solve_steady(grid, gamma, source, boundary, tolerance=1e-8):
    """Elliptic limit x_n^gamma Lap u = -f, i.e. Lap u = -x_n^-gamma f.

    ``source`` and ``boundary`` are spatial arrays (or scalars).
    """
    xn = np.broadcast_to(grid.normal_coordinate(), grid.spatial_shape)
    with np.errstate(divide="ignore"):
        rhs = -np.broadcast_to(source, grid.spatial_shape) * np.where(xn > 0, xn, np.inf) ** (-gamma)
    return solve_poisson(SliceProblem(grid, rhs, boundary, tolerance))


def slice_time_derivative(field, time_index):
    """Discrete u_t at one level.

    Backward difference at interior levels (the implicit stepper's own
    stencil); second-order one-sided difference at the final level when
    two earlier levels exist.
    """
    u = field.values
    last = u.shape[0] - 1
    if not 1 <= time_index <= last:
        raise ValueError(f"time_index must be in [1, {last}], got {time_index}")
    dt = field.grid.dt
    m = time_index
    if m == last and m >= 2:
        return (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * dt)
    return (u[m] - u[m - 1]) / dt


@dataclass(frozen=True, eq=False)
class SliceReport:
    time_index: int
    defect_max: float
    defect: np.ndarray = field(repr=False)
    solve_residual: float = float("nan")
    reproduction_error: float = float("nan")

    def to_dict(self):
        return {
            "time_index": self.time_index,
            "defect_max": self.defect_max,
            "solve_residual": self.solve_residual,
            "reproduction_error": self.reproduction_error,
        }


def weighted_rhs(field, time_index, gamma):
    """x_n^-gamma u_t on one slice; NaN on the face."""
    grid = field.grid
    xn = np.broadcast_to(grid.normal_coordinate(), grid.spatial_shape)
    ut = slice_time_derivative(field, time_index)
    out = np.full(grid.spatial_shape, np.nan)
    pos = xn > 0
    out[pos] = xn[pos] ** (-gamma) * ut[pos]
    return out


def slice_consistency(field, time_index, gamma):
    """Defect Lap_h u(., t) - x_n^-gamma u_t at interior nodes of one slice."""
    grid = field.grid
    lap = discrete_laplacian(field.values[time_index], grid)
    defect = lap - weighted_rhs(field, time_index, gamma)
    defect[grid.boundary_mask()] = np.nan
    finite = defect[np.isfinite(defect)]
    dmax = float(np.max(np.abs(finite))) if finite.size else 0.0
    return SliceReport(time_index=time_index, defect_max=dmax, defect=defect)


def reproduce_slice(field, time_index, gamma, tolerance=1e-8):
    """Solve Lap w = x_n^-gamma u_t with the slice's own boundary values.

    Returns ``(w, report)``; the report carries the consistency defect, the
    final linear residual of the Poisson solve and the max-norm mismatch
    |w - u| as ``reproduction_error``.
    """
    grid = field.grid
    report = slice_consistency(field, time_index, gamma)
    rhs = weighted_rhs(field, time_index, gamma)
    rhs = np.where(np.isfinite(rhs), rhs, 0.0)
    u = field.values[time_index]
    w = solve_poisson(SliceProblem(grid, rhs, u, tolerance))
    mismatch = float(np.max(np.abs(w - u)))
    residual = _poisson_solver(grid, tolerance).last_residual
    report = SliceReport(time_index, report.defect_max, report.defect, residual, mismatch)
    return w, report
