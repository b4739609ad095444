"""
Monotone finite-difference solver for u_t - x_n^gamma Lap u = f.

The face x_n = 0 only carries Dirichlet values; the equation is imposed at
interior nodes with x_n^gamma evaluated at the node.  Both time steppers
are monotone: the explicit update is a convex combination of neighbour
values under ``stable_dt``, and the implicit matrix is an M-matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fields import SpaceTimeField
from .geometry import build_grid
from .linsolve import LinearSolveError, RefinedSolver
from .problem import FaceData, ExteriorData, ProblemConfig, Source, compatibility_warning
from .stencils import discrete_laplacian, laplacian_matrix, stencil_center_weight

__all__ = [
    "discrete_laplacian",
    "stable_dt",
    "step_explicit",
    "solve_implicit_step",
    "implicit_matrix",
    "ImplicitSystem",
    "solve_problem",
    "march_to_steady",
    "ComparisonReport",
    "check_discrete_comparison",
    "LinearSolveError",
]

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


def _weight(grid, gamma):
    w = np.broadcast_to(grid.normal_coordinate() ** gamma, grid.spatial_shape).copy()
    w[grid.boundary_mask()] = 0.0
    return w


def stable_dt(grid, gamma, safety=1.0):
    """Largest explicit step keeping every update a convex combination.

    safety * min over interior nodes of 1 / (x_n^gamma * c), with c the
    Laplacian center weight (equal to the sum of the off-center weights).
    """
    if not 0 < safety <= 1:
        raise ValueError(f"safety out of (0,1]: {safety!r}")
    c = stencil_center_weight(grid)
    xn = np.broadcast_to(grid.normal_coordinate(), grid.spatial_shape)
    interior = ~grid.boundary_mask()
    rate = xn[interior] ** gamma * c[interior]
    return float(safety / np.max(rate))


def _check_gamma_match(config, grid):
    if config.gamma != grid.gamma:
        raise ValueError(f"config gamma {config.gamma} differs from grid gamma {grid.gamma}")


def _apply_boundary(u, config, grid, t, coords=None):
    bmask = grid.boundary_mask()
    bvals = config.boundary_values(grid, t, coords)
    u[bmask] = bvals[bmask]
    return u


def step_explicit(state, dt, t, config, grid):
    """Forward Euler from time ``t`` to ``t + dt``."""
    limit = stable_dt(grid, config.gamma, 1.0)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:.6g} exceeds the stability bound {limit:.6g}")
    state = np.asarray(state, dtype=float)
    lap = discrete_laplacian(state, grid)
    w = grid.normal_coordinate() ** config.gamma
    f = config.source.at(grid, t)
    new = state + dt * (w * lap + f)
    return _apply_boundary(new, config, grid, t + dt)


def implicit_matrix(grid, gamma, dt):
    """I - dt diag(x_n^gamma) L on interior rows, identity rows on Dirichlet nodes."""
    L = laplacian_matrix(grid)
    w = _weight(grid, gamma).ravel()
    n = w.size
    return (sp.identity(n, format="csr") - dt * sp.diags(w) @ L).tocsr()


class ImplicitSystem:
    """Backward-Euler operator for one (grid, gamma, dt), factored once."""

    def __init__(self, grid, gamma, dt, tolerance=1e-12):
        self.grid = grid
        self.gamma = gamma
        self.dt = float(dt)
        self.matrix = implicit_matrix(grid, gamma, dt)
        self.solver = RefinedSolver(self.matrix, tolerance)
        self._bmask = grid.boundary_mask()

    def step(self, state, t, config, coords=None):
        grid = self.grid
        t_new = t + self.dt
        rhs = np.asarray(state, dtype=float) + self.dt * config.source.at(grid, t_new, coords)
        bvals = config.boundary_values(grid, t_new, coords)
        rhs[self._bmask] = bvals[self._bmask]
        x = self.solver.solve(rhs.ravel(), x0=np.asarray(state, dtype=float).ravel())
        return x.reshape(grid.spatial_shape)


def solve_implicit_step(state, dt, t, config, grid, system=None):
    """Backward Euler from ``t`` to ``t + dt``: (I - dt x_n^gamma Lap_h) u_new = u + dt f."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if system is None or system.dt != dt or system.grid is not grid:
        system = ImplicitSystem(grid, config.gamma, dt, config.linear_solve_tolerance)
    return system.step(state, t, config)


def solve_problem(config, grid, check_compatibility=True):
    """March from t_start to 0 and return every level."""
    _check_gamma_match(config, grid)
    if check_compatibility:
        config.check_compatibility(grid)
    compatibility_warning(config, grid)
    dt = grid.dt
    coords = grid.mesh()
    values = np.empty(grid.shape)
    values[0] = config.initial_values(grid, coords)
    if config.scheme == "explicit":
        limit = stable_dt(grid, config.gamma, config.cfl_safety)
        if dt > limit * (1 + 1e-12):
            raise ValueError(
                f"time step {dt:.6g} exceeds cfl_safety * stable_dt = {limit:.6g}; "
                f"use n_time >= {int(np.ceil(-grid.t_start / limit))}"
            )
        for m in range(1, grid.shape[0]):
            values[m] = step_explicit(values[m - 1], dt, float(grid.time_axis[m - 1]), config, grid)
    else:
        system = ImplicitSystem(grid, config.gamma, dt, config.linear_solve_tolerance)
        for m in range(1, grid.shape[0]):
            values[m] = system.step(values[m - 1], float(grid.time_axis[m - 1]), config, coords)
    return SpaceTimeField(grid, values)


def march_to_steady(config, grid, tol=1e-9, dt0=None, max_steps=200):
    """Implicit march with a doubling step until ||u(t) - u(t - dt)|| <= tol.

    Needs time-independent data; returns the final spatial slice.  The step
    grows geometrically so slow modes near the face relax in O(log) steps.
    """
    if not config.face.time_independent(grid):
        raise ValueError("steady march needs time-independent face data")
    coords = grid.mesh()
    u = config.initial_values(grid, coords)
    dt = grid.dt if dt0 is None else dt0
    for _ in range(max_steps):
        system = ImplicitSystem(grid, config.gamma, dt, config.linear_solve_tolerance)
        new = system.step(u, 0.0, config, coords)
        change = float(np.max(np.abs(new - u)))
        u = new
        if change <= tol:
            return u
        dt = min(2.0 * dt, 1e8)
    raise RuntimeError(f"steady state not reached in {max_steps} steps (last change {change:.3g})")


@dataclass(frozen=True)
class ComparisonReport:
    instances: int
    max_violation: float
    scale: float
    passed: bool

    def to_dict(self):
        return {
            "instances": self.instances,
            "max_violation": self.max_violation,
            "scale": self.scale,
            "pass": self.passed,
        }


def _same_structure(a, b):
    return a.gamma == b.gamma and a.scheme == b.scheme and a.cfl_safety == b.cfl_safety


def _relevant(grid):
    """Nodes whose Dirichlet-table entry is actually used."""
    mask = np.zeros(grid.shape, dtype=bool)
    mask[0] = True
    mask[1:] = grid.boundary_mask()
    return mask


def check_discrete_comparison(config_u, config_v, grid, trials=100, seed=0):
    """Property test of the discrete comparison principle.

    Trial 0 solves the two given problems.  Every further trial adds the
    same random field to both data sets and a random nonnegative gap to the
    larger one, so the data stay ordered; the report holds the largest
    positive part of u - v seen over all nodes and levels.
    """
    if not _same_structure(config_u, config_v):
        raise ValueError("configs must differ only in data and source")
    _check_gamma_match(config_u, grid)
    fu, fv = config_u.source_table(grid), config_v.source_table(grid)
    bu, bv = config_u.dirichlet_table(grid), config_v.dirichlet_table(grid)
    rel = _relevant(grid)
    if np.any(fu[:, ~grid.boundary_mask()] > fv[:, ~grid.boundary_mask()]) or np.any(bu[rel] > bv[rel]):
        raise ValueError("unordered inputs: need f_u <= f_v and data_u <= data_v")

    rng = np.random.default_rng(seed)
    scale = max(1.0, np.max(np.abs(fu)), np.max(np.abs(fv)), np.max(np.abs(bu[rel])), np.max(np.abs(bv[rel])))
    worst = 0.0
    for k in range(trials):
        if k == 0:
            pu = config_u.replace(source=Source("tabulated", table=fu),
                                  face=FaceData("tabulated", table=bu),
                                  exterior=ExteriorData("tabulated", table=bu))
            pv = config_v.replace(source=Source("tabulated", table=fv),
                                  face=FaceData("tabulated", table=bv),
                                  exterior=ExteriorData("tabulated", table=bv))
        else:
            noise_f = rng.uniform(-1, 1, grid.shape)
            noise_b = rng.uniform(-1, 1, grid.shape)
            gap_f = rng.uniform(0, 1, grid.shape) * (rng.random(grid.shape) < 0.5)
            gap_b = rng.uniform(0, 1, grid.shape) * (rng.random(grid.shape) < 0.5)
            tu_f, tv_f = fu + noise_f, fv + noise_f + gap_f
            tu_b, tv_b = bu + noise_b, bv + noise_b + gap_b
            pu = config_u.replace(source=Source("tabulated", table=tu_f),
                                  face=FaceData("tabulated", table=tu_b),
                                  exterior=ExteriorData("tabulated", table=tu_b))
            pv = config_v.replace(source=Source("tabulated", table=tv_f),
                                  face=FaceData("tabulated", table=tv_b),
                                  exterior=ExteriorData("tabulated", table=tv_b))
            scale = max(scale, np.max(np.abs(tv_f)), np.max(np.abs(tu_f)),
                        np.max(np.abs(tv_b[rel])), np.max(np.abs(tu_b[rel])))
        u = solve_problem(pu, grid, check_compatibility=False).values
        v = solve_problem(pv, grid, check_compatibility=False).values
        worst = max(worst, float(np.max(u - v, initial=0.0)))
    passed = bool(worst <= 10 * EPS * scale)
    return ComparisonReport(instances=trials, max_violation=max(worst, 0.0), scale=float(scale), passed=passed)


def coarse_comparison_grid(gamma=0.5, n_dims=1, n_normal=8, n_tan=4, safety=0.9, t_start=-0.01):
    """A grid whose uniform time step satisfies the explicit bound."""
    probe = build_grid(n_dims, n_tan, n_normal, 1, 2.0, gamma, t_start)
    limit = stable_dt(probe, gamma, safety)
    n_time = int(np.ceil(-t_start / limit))
    return build_grid(n_dims, n_tan, n_normal, n_time, 2.0, gamma, t_start)
