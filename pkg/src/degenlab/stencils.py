"""Second-difference stencils on the graded half-box."""

import numpy as np
import scipy.sparse as sp

__all__ = ["axis_weights", "discrete_laplacian", "laplacian_matrix", "stencil_center_weight"]


def axis_weights(nodes):
    """Three-point second-difference weights on a (possibly nonuniform) axis.

    Returns ``(lower, upper)`` arrays for the interior nodes 1..M-1 such that
    u'' ~ lower * (u[j-1] - u[j]) + upper * (u[j+1] - u[j]).  Both are
    positive, which is what makes the scheme monotone.
    """
    h = np.diff(nodes)
    hm, hp = h[:-1], h[1:]
    lower = 2.0 / (hm * (hm + hp))
    upper = 2.0 / (hp * (hm + hp))
    return lower, upper


def _second_difference(u, nodes, axis):
    """Apply the 3-point stencil along ``axis``; returns interior-only values."""
    lower, upper = axis_weights(nodes)
    shape = [1] * u.ndim
    shape[axis] = -1
    lower = lower.reshape(shape)
    upper = upper.reshape(shape)
    n = u.shape[axis]
    mid = np.take(u, np.arange(1, n - 1), axis=axis)
    left = np.take(u, np.arange(0, n - 2), axis=axis)
    right = np.take(u, np.arange(2, n), axis=axis)
    return upper * (right - mid) - lower * (mid - left)


def discrete_laplacian(u, grid):
    """Discrete Laplacian of one spatial slice; NaN on boundary nodes.

    Tangential axes use the uniform 3-point difference and the normal axis
    the nonuniform 3-point difference
    2 [(u[j+1] - u[j]) / h+ - (u[j] - u[j-1]) / h-] / (h+ + h-).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != grid.spatial_shape:
        raise ValueError(f"slice shape {u.shape} does not match grid {grid.spatial_shape}")
    out = np.full(u.shape, np.nan)
    inner = tuple(slice(1, -1) for _ in range(grid.n_dims))
    acc = np.zeros(tuple(s - 2 for s in u.shape))
    for axis, nodes in enumerate(grid.axes):
        d2 = _second_difference(u, nodes, axis)
        idx = [slice(1, -1)] * grid.n_dims
        idx[axis] = slice(None)
        acc += d2[tuple(idx)]
    out[inner] = acc
    return out


def stencil_center_weight(grid):
    """Magnitude of the Laplacian's center weight at every interior node.

    Equals the sum of the off-center weights.  NaN on boundary nodes.
    """
    out = np.full(grid.spatial_shape, np.nan)
    acc = np.zeros(tuple(s - 2 for s in grid.spatial_shape))
    for axis, nodes in enumerate(grid.axes):
        lower, upper = axis_weights(nodes)
        shape = [1] * grid.n_dims
        shape[axis] = -1
        acc = acc + (lower + upper).reshape(shape)
    out[tuple(slice(1, -1) for _ in range(grid.n_dims))] = acc
    return out


def _axis_matrix(nodes):
    m = len(nodes)
    lower, upper = axis_weights(nodes)
    rows = np.arange(1, m - 1)
    data = np.concatenate([lower, -(lower + upper), upper])
    ii = np.concatenate([rows, rows, rows])
    jj = np.concatenate([rows - 1, rows, rows + 1])
    return sp.csr_matrix((data, (ii, jj)), shape=(m, m))


def laplacian_matrix(grid):
    """Sparse Laplacian over all spatial nodes in C order; boundary rows are zero."""
    mats = [_axis_matrix(nodes) for nodes in grid.axes]
    sizes = [len(a) for a in grid.axes]
    total = None
    for axis, mat in enumerate(mats):
        term = sp.identity(1, format="csr")
        for k in range(grid.n_dims):
            factor = mat if k == axis else sp.identity(sizes[k], format="csr")
            term = sp.kron(term, factor, format="csr")
        total = term if total is None else total + term
    interior = ~grid.boundary_mask().ravel()
    keep = sp.diags(interior.astype(float))
    return (keep @ total).tocsr()
