"""
Boundary-regularity estimators.

Everything here works on a :class:`SpaceTimeField` and a
:class:`CylinderRegion`.  The central object is the flatness trace: on
cylinders Q_{eta^k}^+ shrinking toward a face point, the best uniform
approximation of u by a multiple of x_n (or by an affine function when the
face data is nonzero) leaves a residual M_k.  If u is C^{1,alpha} at the
point, M_k decays like eta^(k(1 + alpha)), and a log-log line through the
trace recovers alpha.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .fields import SpaceTimeField
from .geometry import cylinder_nodes

__all__ = [
    "HolderSampling",
    "HolderReport",
    "holder_seminorm",
    "holder_reports",
    "best_flat_coefficient",
    "best_affine_fit",
    "FlatnessLevel",
    "FlatnessTrace",
    "flatness_trace",
    "ExponentFit",
    "fit_boundary_exponent",
    "weighted_time_derivative",
    "boundary_lipschitz_ratio",
    "tangential_derivative",
]

METRICS = ("anisotropic", "parabolic")


# ---------------------------------------------------------------------------
# Hölder seminorms


@dataclass(frozen=True)
class HolderSampling:
    """Pair selection.

    Regions with at most ``cap`` nodes use every pair.  Larger regions use
    ``n_random`` seeded random pairs, all nearest-neighbour pairs, and every
    node paired with the face-closest node on its normal line (the family
    that sees the boundary layer, where the seminorms of interest peak).
    """

    cap: int = 20_000
    n_random: int = 1_000_000
    seed: int = 0


@dataclass(frozen=True)
class HolderReport:
    exponent: float
    metric: str
    seminorm_lower_bound: float
    pair_count: int

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "metric": self.metric,
            "seminorm_lower_bound": self.seminorm_lower_bound,
            "pair_count": self.pair_count,
        }


def _node_table(field, mask):
    """Coordinates (k, n), times (k,), values (k,) and index tuples of masked nodes."""
    grid = field.grid
    idx = np.nonzero(mask)
    t = grid.time_axis[idx[0]]
    x = np.stack([ax[i] for ax, i in zip(grid.axes, idx[1:])], axis=1)
    return x, t, field.values[idx], idx


def _time_power(metric, gamma):
    if metric == "parabolic":
        return 0.5
    if metric == "anisotropic":
        return 1.0 / (2.0 - gamma)
    raise ValueError(f"unknown metric {metric!r}")


def _pair_ratios(x, t, u, i, j, exponent, tp):
    d = np.sqrt(np.sum((x[i] - x[j]) ** 2, axis=1)) + np.abs(t[i] - t[j]) ** tp
    diff = np.abs(u[i] - u[j])
    ok = d > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(diff[ok] / d[ok] ** exponent))


def _block_ratio(x, t, u, start, stop, exponent, tp):
    """Max ratio over pairs (i, j) with start <= i < stop and j > i."""
    sq = 0.0
    for c in range(x.shape[1]):
        sq = sq + (x[start:stop, c, None] - x[None, start + 1:, c]) ** 2
    d = np.sqrt(sq) + np.abs(t[start:stop, None] - t[None, start + 1:]) ** tp
    d[d <= 0] = np.inf
    ratio = np.abs(u[start:stop, None] - u[None, start + 1:]) / d**exponent
    # columns start+1 .. stop-1 overlap the row block: keep j > i only
    width = stop - start
    ratio[:, : width - 1] = np.triu(ratio[:, : width - 1])
    return float(ratio.max(initial=0.0))


def _neighbour_pairs(mask):
    """Flat index pairs of nodes adjacent along one array axis, both in mask."""
    order = -np.ones(mask.shape, dtype=np.int64)
    order[mask] = np.arange(int(mask.sum()))
    pi, pj = [], []
    for axis in range(mask.ndim):
        n = mask.shape[axis]
        a = [slice(None)] * mask.ndim
        b = [slice(None)] * mask.ndim
        a[axis] = slice(0, n - 1)
        b[axis] = slice(1, n)
        both = mask[tuple(a)] & mask[tuple(b)]
        pi.append(order[tuple(a)][both])
        pj.append(order[tuple(b)][both])
    return np.concatenate(pi), np.concatenate(pj)


def _face_line_pairs(mask):
    """Each masked node paired with the masked node of its normal line closest to the face."""
    order = -np.ones(mask.shape, dtype=np.int64)
    order[mask] = np.arange(int(mask.sum()))
    has = mask.any(axis=-1)
    first = np.argmax(mask, axis=-1)
    anchor = np.take_along_axis(order, first[..., None], axis=-1)
    anchor = np.broadcast_to(anchor, mask.shape)
    sel = mask & has[..., None] & (order != anchor)
    return anchor[sel], order[sel]


def holder_seminorm(field, exponent, metric, region, sampling=None):
    """Max over examined pairs of |u(p) - u(q)| / d(p, q)^exponent.

    A max over a subset of pairs, hence a certified lower bound of the true
    seminorm on the region.  NaN-valued nodes are skipped.
    """
    if not 0 < exponent <= 1 + 1e-12:
        raise ValueError(f"exponent out of (0,1]: {exponent!r}")
    if region.is_empty:
        raise ValueError("empty region")
    sampling = sampling or HolderSampling()
    tp = _time_power(metric, field.grid.gamma)
    mask = region.mask & np.isfinite(field.values)
    x, t, u, _ = _node_table(field, mask)
    k = u.size
    best = 0.0
    pairs = 0
    if k < 2:
        return HolderReport(exponent, metric, 0.0, 0)
    if k <= sampling.cap:
        block = max(1, 2_000_000 // k)
        for start in range(0, k - 1, block):
            stop = min(start + block, k - 1)
            best = max(best, _block_ratio(x, t, u, start, stop, exponent, tp))
            pairs += sum(k - 1 - r for r in range(start, stop))
    else:
        rng = np.random.default_rng(sampling.seed)
        chunk = 500_000
        remaining = sampling.n_random
        while remaining > 0:
            m = min(chunk, remaining)
            i = rng.integers(0, k, m)
            j = rng.integers(0, k, m)
            best = max(best, _pair_ratios(x, t, u, i, j, exponent, tp))
            pairs += m
            remaining -= m
        for i, j in (_neighbour_pairs(mask), _face_line_pairs(mask)):
            best = max(best, _pair_ratios(x, t, u, i, j, exponent, tp))
            pairs += i.size
    return HolderReport(float(exponent), metric, best, int(pairs))


def holder_reports(field, exponent, region, sampling=None):
    """Reports in both metrics, keyed by metric name."""
    return {m: holder_seminorm(field, exponent, m, region, sampling) for m in METRICS}


# ---------------------------------------------------------------------------
# Best flat approximation


def _region_samples(field, region):
    mask = region.mask & np.isfinite(field.values)
    x, t, u, idx = _node_table(field, mask)
    return x, u, idx


def _chebyshev_flat(xn, u, tol=1e-12):
    """argmin_a max |u - a xn| by bisection on max(u - a xn) + min(u - a xn)."""

    def balance(a):
        r = u - a * xn
        return r.max() + r.min()

    lo, hi = -1.0, 1.0
    while balance(lo) < 0:
        lo *= 2.0
    while balance(hi) > 0:
        hi *= 2.0
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if balance(mid) > 0:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= np.spacing(max(abs(lo), abs(hi))) * 2:
            break
    a = 0.5 * (lo + hi)
    r = u - a * xn
    best = np.max(np.abs(r))
    # polish: the optimum sits where the extreme positive and negative deviations meet
    i, j = int(np.argmax(r)), int(np.argmin(r))
    if xn[i] + xn[j] > 0:
        cand = (u[i] + u[j]) / (xn[i] + xn[j])
        val = np.max(np.abs(u - cand * xn))
        if val <= best:
            a, best = cand, val
    return float(a), float(best)


def best_flat_coefficient(field, region):
    """(a, residual) minimizing sup over the region of |u - a x_n|."""
    x, u, _ = _region_samples(field, region)
    if u.size == 0:
        raise ValueError("empty region")
    xn = x[:, -1]
    if not np.any(xn > 0):
        raise ValueError("region has no nodes with x_n > 0")
    return _chebyshev_flat(xn, u)


def best_affine_fit(field, region, anchor=None):
    """Best uniform approximation by a . (x - anchor) + b, solved as a linear program.

    Returns ``(gradient, offset, residual)``.
    """
    x, u, _ = _region_samples(field, region)
    if u.size == 0:
        raise ValueError("empty region")
    if not np.any(x[:, -1] > 0):
        raise ValueError("region has no nodes with x_n > 0")
    if anchor is not None:
        x = x - np.asarray(anchor, dtype=float)
    k, n = x.shape
    # variables: gradient (n), offset, bound s; minimise s
    ones = np.ones((k, 1))
    A_ub = np.block([[-x, -ones, -ones], [x, ones, -ones]])
    b_ub = np.concatenate([-u, u])
    c = np.zeros(n + 2)
    c[-1] = 1.0
    bounds = [(None, None)] * (n + 1) + [(0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"affine Chebyshev fit failed: {res.message}")
    grad, off = res.x[:n], res.x[n]
    resid = float(np.max(np.abs(u - x @ grad - off)))
    return grad, float(off), resid


# ---------------------------------------------------------------------------
# Flatness traces and exponent fits


@dataclass(frozen=True)
class FlatnessLevel:
    k: int
    a_k: float
    residual_k: float


@dataclass(frozen=True)
class FlatnessTrace:
    eta: float
    gamma: float
    anchor: tuple
    levels: tuple
    comparison: str = "flat"
    truncated: bool = False

    @property
    def residuals(self):
        return np.array([lv.residual_k for lv in self.levels])

    @property
    def coefficients(self):
        return np.array([lv.a_k for lv in self.levels])

    def rows(self):
        return [(lv.k, self.eta ** lv.k, lv.a_k, lv.residual_k) for lv in self.levels]


def flatness_trace(field, anchor, eta=0.5, K=5, comparison="flat"):
    """Best-flat residuals on Q_{eta^k}^+(anchor) for k = 0..K.

    ``anchor`` is a face point ``(x, t)`` with x_n = 0.  ``comparison`` is
    ``'flat'`` (class {a x_n}) or ``'affine'`` (class {a . x + b}); for the
    affine class ``a_k`` records the normal component of the gradient.
    The trace stops early, with ``truncated`` set, once a cylinder holds
    fewer than three distinct normal levels.
    """
    x0, t0 = anchor
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0[-1] != 0:
        raise ValueError("anchor must lie on the face x_n = 0")
    if not 0 < eta < 1:
        raise ValueError(f"eta out of (0,1): {eta!r}")
    if comparison not in ("flat", "affine"):
        raise ValueError(f"unknown comparison class {comparison!r}")
    grid = field.grid
    levels = []
    truncated = False
    for k in range(K + 1):
        region = cylinder_nodes(grid, (x0, t0), eta ** k)
        normal_idx = np.nonzero(region.mask.any(axis=tuple(range(grid.n_dims))))[0]
        if region.is_empty or normal_idx.size < 3:
            truncated = True
            break
        if comparison == "flat":
            a, res = best_flat_coefficient(field, region)
        else:
            grad, _, res = best_affine_fit(field, region, anchor=x0)
            a = float(grad[-1])
        levels.append(FlatnessLevel(k, a, res))
    return FlatnessTrace(
        eta=float(eta),
        gamma=grid.gamma,
        anchor=(tuple(x0), float(t0)),
        levels=tuple(levels),
        comparison=comparison,
        truncated=truncated,
    )


@dataclass(frozen=True)
class ExponentFit:
    alpha_hat: float
    slope: float
    intercept: float
    rms_log_residual: float
    k_range: tuple

    def to_dict(self):
        return {
            "alpha_hat": self.alpha_hat,
            "slope": self.slope,
            "intercept": self.intercept,
            "rms": self.rms_log_residual,
            "k_range": list(self.k_range),
        }


def fit_boundary_exponent(trace, k_min, k_max, floor=0.0):
    """Least-squares line through (log eta^k, log residual_k).

    The slope per unit log-radius is 1 + alpha_hat.  Levels whose residual
    is below ``floor`` (the discretization floor) are dropped; a
    nonpositive residual among the kept levels is an error.
    """
    if k_max <= k_min:
        raise ValueError("need k_max > k_min")
    rows = [lv for lv in trace.levels if k_min <= lv.k <= k_max]
    kept = [lv for lv in rows if not (0 < lv.residual_k < floor)]
    if any(lv.residual_k <= 0 for lv in kept):
        raise ValueError("nonpositive residual in fit range (below the discretization floor)")
    if len(kept) < 2:
        raise ValueError(f"fewer than two usable levels in [{k_min}, {k_max}]")
    k = np.array([lv.k for lv in kept], dtype=float)
    X = k * np.log(trace.eta)
    Y = np.log([lv.residual_k for lv in kept])
    slope, intercept = np.polyfit(X, Y, 1)
    rms = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
    return ExponentFit(
        alpha_hat=float(slope - 1.0),
        slope=float(slope),
        intercept=float(intercept),
        rms_log_residual=rms,
        k_range=(int(k[0]), int(k[-1])),
    )


# ---------------------------------------------------------------------------
# Derived fields


def weighted_time_derivative(field, gamma=None):
    """x_n^-gamma times the backward time difference; NaN on the face and at level 0."""
    grid = field.grid
    gamma = grid.gamma if gamma is None else gamma
    u = field.values
    if u.shape[0] < 2:
        raise ValueError("need at least two time levels")
    xn = grid.normal_axis
    weight = np.full(xn.shape, np.nan)
    weight[xn > 0] = xn[xn > 0] ** (-gamma)
    out = np.full(u.shape, np.nan)
    out[1:] = (u[1:] - u[:-1]) / grid.dt * weight
    return SpaceTimeField(grid, out)


def boundary_lipschitz_ratio(field, region):
    """sup of |u| / x_n over region nodes with x_n > 0."""
    x, u, _ = _region_samples(field, region)
    pos = x[:, -1] > 0
    if not np.any(pos):
        raise ValueError("region has no nodes with x_n > 0")
    return float(np.max(np.abs(u[pos]) / x[pos, -1]))


def _central(values, axis, spacing, order):
    n = values.shape[axis]
    out = np.full(values.shape, np.nan)
    if n < 3:
        return out
    mid = [slice(None)] * values.ndim
    lo = [slice(None)] * values.ndim
    hi = [slice(None)] * values.ndim
    mid[axis], lo[axis], hi[axis] = slice(1, n - 1), slice(0, n - 2), slice(2, n)
    a, b, c = values[tuple(lo)], values[tuple(mid)], values[tuple(hi)]
    if order == 1:
        out[tuple(mid)] = (c - a) / (2.0 * spacing)
    else:
        out[tuple(mid)] = (c - 2.0 * b + a) / spacing**2
    return out


def tangential_derivative(field, kappa):
    """Central differences in the (x', t) directions.

    ``kappa`` has length n: entries 0..n-2 are orders along the tangential
    axes, the last entry is the order in time.  Each order is at most 2.
    The valid region shrinks by one node per differenced order; the margin
    holds NaN.
    """
    grid = field.grid
    kappa = tuple(int(k) for k in kappa)
    if len(kappa) != grid.n_dims:
        raise ValueError(f"kappa must have length {grid.n_dims}")
    if any(k < 0 or k > 2 for k in kappa):
        raise ValueError("orders must be in 0..2")
    values = field.values.copy()
    for i, order in enumerate(kappa[:-1]):
        if order:
            h = grid.tangential_axes[i][1] - grid.tangential_axes[i][0]
            values = _central(values, i + 1, h, order)
    if kappa[-1]:
        if grid.shape[0] < 3:
            raise ValueError("time derivative stencil exceeds the stored levels")
        values = _central(values, 0, grid.dt, kappa[-1])
    return SpaceTimeField(grid, values)
