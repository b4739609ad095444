"""
Discrete half-box geometry.

The physical domain is the half-box (-1, 1)^(n-1) x (0, 1) crossed with a
time interval [t_start, 0].  Tangential axes are uniform; the normal axis is
power graded toward the degenerate face x_n = 0, node j sitting at
(j / N)^q.

Point convention: a space-time point is a pair ``(x, t)`` with ``x`` a
length-n sequence whose last entry is the normal coordinate x_n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "CylinderRegion",
    "build_grid",
    "anisotropic_distance",
    "parabolic_distance",
    "cylinder_nodes",
]


def _check_gamma(gamma):
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma out of (0,1): {gamma!r}")


def _frozen(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product space-time grid.

    Attributes:
        n_dims: spatial dimension n (1, 2 or 3).
        tangential_axes: n - 1 uniform node arrays on [-1, 1].
        normal_axis: graded node array on [0, 1].
        time_axis: uniform node array on [t_start, 0].
        gamma: degeneracy exponent in (0, 1).

    Field arrays on this grid are laid out as ``(time, x_1, ..., x_n)``
    with the normal coordinate last.
    """

    n_dims: int
    tangential_axes: tuple
    normal_axis: np.ndarray
    time_axis: np.ndarray
    gamma: float
    n_tan: int
    n_normal: int
    n_time: int
    grading_q: float
    t_start: float

    @property
    def spatial_shape(self):
        return tuple(len(a) for a in self.tangential_axes) + (len(self.normal_axis),)

    @property
    def shape(self):
        return (len(self.time_axis),) + self.spatial_shape

    @property
    def dt(self):
        return float(self.time_axis[1] - self.time_axis[0])

    @property
    def axes(self):
        """Spatial node arrays, normal axis last."""
        return tuple(self.tangential_axes) + (self.normal_axis,)

    def mesh(self):
        """Broadcastable spatial coordinate arrays (sparse meshgrid)."""
        return np.meshgrid(*self.axes, indexing="ij", sparse=True)

    def normal_coordinate(self):
        """x_n broadcastable against a spatial slice."""
        shape = (1,) * (self.n_dims - 1) + (len(self.normal_axis),)
        return self.normal_axis.reshape(shape)

    def boundary_mask(self):
        """True on Dirichlet nodes: face, top, and lateral walls."""
        mask = np.zeros(self.spatial_shape, dtype=bool)
        for axis in range(self.n_dims):
            idx = [slice(None)] * self.n_dims
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    def face_mask(self):
        mask = np.zeros(self.spatial_shape, dtype=bool)
        mask[..., 0] = True
        return mask

    def max_spacing(self):
        spacings = [np.max(np.diff(a)) for a in self.axes]
        return float(max(spacings))

    def min_spacing(self):
        spacings = [np.min(np.diff(a)) for a in self.axes]
        return float(min(spacings))

    def to_dict(self):
        return {
            "n_dims": self.n_dims,
            "n_tan": self.n_tan,
            "n_normal": self.n_normal,
            "n_time": self.n_time,
            "grading_q": self.grading_q,
            "gamma": self.gamma,
            "t_start": self.t_start,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return build_grid(
            int(d["n_dims"]),
            int(d["n_tan"]),
            int(d["n_normal"]),
            int(d["n_time"]),
            float(d["grading_q"]),
            float(d["gamma"]),
            float(d["t_start"]),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def with_gamma(self, gamma):
        d = self.to_dict()
        d["gamma"] = gamma
        return Grid.from_dict(d)


def build_grid(n_dims, n_tan, n_normal, n_time, grading_q=2.0, gamma=0.5, t_start=-1.0):
    """Build a graded half-box grid.

    ``n_tan``, ``n_normal`` and ``n_time`` count intervals, so each axis
    carries one more node than its count.
    """
    _check_gamma(gamma)
    if not 1 <= n_dims <= 3:
        raise ValueError(f"n_dims must be 1, 2 or 3, got {n_dims}")
    if n_normal < 1 or n_time < 1 or n_tan < 1 or (n_dims > 1 and n_tan < 2):
        raise ValueError("grid sizes must be positive")
    if n_normal < 8:
        raise ValueError(f"n_normal must be >= 8, got {n_normal}")
    if grading_q < 1:
        raise ValueError(f"grading_q must be >= 1, got {grading_q}")
    if not t_start < 0:
        raise ValueError(f"t_start must be negative, got {t_start}")

    j = np.arange(n_normal + 1)
    if grading_q == 1:
        normal = j / n_normal
    else:
        normal = (j / n_normal) ** grading_q
    tangential = tuple(
        _frozen(np.linspace(-1.0, 1.0, n_tan + 1)) for _ in range(n_dims - 1)
    )
    time = np.linspace(t_start, 0.0, n_time + 1)
    return Grid(
        n_dims=n_dims,
        tangential_axes=tangential,
        normal_axis=_frozen(normal),
        time_axis=_frozen(time),
        gamma=float(gamma),
        n_tan=int(n_tan),
        n_normal=int(n_normal),
        n_time=int(n_time),
        grading_q=float(grading_q),
        t_start=float(t_start),
    )


def _split(p):
    x, t = p
    return np.atleast_1d(np.asarray(x, dtype=float)), float(t)


def anisotropic_distance(p, q, gamma):
    """|x - y| + |t - s|^(1/(2 - gamma)), the scaling-invariant boundary metric."""
    _check_gamma(gamma)
    x, t = _split(p)
    y, s = _split(q)
    return float(np.linalg.norm(x - y) + abs(t - s) ** (1.0 / (2.0 - gamma)))


def parabolic_distance(p, q):
    """|x - y| + |t - s|^(1/2)."""
    x, t = _split(p)
    y, s = _split(q)
    return float(np.linalg.norm(x - y) + np.sqrt(abs(t - s)))


@dataclass(frozen=True, eq=False)
class CylinderRegion:
    """Nodes of Q_r^+(x0, t0) = B_r^+(x0) x (t0 - r^(2-gamma), t0].

    ``mask`` has the full field shape ``(time, *spatial)``.  An empty region
    is a valid value; check ``is_empty`` before estimating on it.
    """

    center: tuple
    radius: float
    depth: float
    mask: np.ndarray = field(repr=False)

    @property
    def is_empty(self):
        return not bool(self.mask.any())

    @property
    def size(self):
        return int(self.mask.sum())

    def node_indices(self):
        """Array of (time_index, *spatial_index) rows."""
        return np.argwhere(self.mask)


def cylinder_nodes(grid, center, r):
    """Select grid nodes inside the scaled parabolic cylinder around ``center``."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    x0, t0 = _split(center)
    if x0.shape != (grid.n_dims,):
        raise ValueError("center dimension does not match grid")
    lo = [-1.0] * (grid.n_dims - 1) + [0.0]
    if np.any(x0 < np.array(lo) - 1e-14) or np.any(x0 > 1 + 1e-14):
        raise ValueError("center outside the grid")
    if not grid.time_axis[0] - 1e-14 <= t0 <= 1e-14:
        raise ValueError("center time outside the grid")

    depth = r ** (2.0 - grid.gamma)
    coords = grid.mesh()
    dist2 = sum((c - c0) ** 2 for c, c0 in zip(coords, x0))
    in_ball = dist2 < r * r
    t = grid.time_axis
    in_time = (t > t0 - depth) & (t <= t0)
    mask = in_time.reshape((-1,) + (1,) * grid.n_dims) & in_ball[None, ...]
    mask = np.ascontiguousarray(mask)
    mask.setflags(write=False)
    return CylinderRegion(center=(tuple(x0), t0), radius=float(r), depth=depth, mask=mask)
