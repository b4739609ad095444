import numpy as np
import pytest
from hypothesis import given, strategies as st

from degenlab.geometry import (
    Grid,
    anisotropic_distance,
    build_grid,
    cylinder_nodes,
    parabolic_distance,
)


def test_graded_nodes_match_formula():
    g = build_grid(1, 2, 8, 4, grading_q=2.0)
    assert g.normal_axis[3] == 9 / 64
    # the 4-interval grid's nodes are the even nodes of the 8-interval one
    np.testing.assert_array_equal(g.normal_axis[::2], [0, 1 / 16, 1 / 4, 9 / 16, 1])


def test_uniform_when_q_is_one():
    g = build_grid(2, 4, 10, 4, grading_q=1.0)
    np.testing.assert_array_equal(g.normal_axis, np.arange(11) / 10)


@pytest.mark.parametrize("n_normal,q", [(8, 1.0), (16, 2.0), (33, 3.5)])
def test_grid_invariants(n_normal, q):
    g = build_grid(3, 6, n_normal, 5, q, 0.3, -0.5)
    assert g.normal_axis[0] == 0 and g.normal_axis[-1] == 1
    assert np.all(np.diff(g.normal_axis) > 0)
    for ax in g.tangential_axes:
        h = np.diff(ax)
        assert np.allclose(h, h[0], rtol=1e-12, atol=0)
    assert g.shape == (6, 7, 7, n_normal + 1)
    assert g.dt == pytest.approx(0.1)


@pytest.mark.parametrize(
    "kw",
    [
        dict(gamma=0.0),
        dict(gamma=1.0),
        dict(gamma=-0.2),
        dict(n_normal=4),
        dict(grading_q=0.5),
        dict(t_start=0.0),
        dict(n_time=0),
        dict(n_tan=1),
        dict(n_dims=4),
    ],
)
def test_build_grid_rejects(kw):
    args = dict(n_dims=2, n_tan=4, n_normal=8, n_time=4, grading_q=2.0, gamma=0.5, t_start=-1.0)
    args.update(kw)
    with pytest.raises(ValueError):
        build_grid(**args)


def test_grid_json_round_trip():
    g = build_grid(2, 4, 16, 3, 2.5, 0.4, -0.25)
    h = Grid.from_json(g.to_json())
    assert h.shape == g.shape and h.gamma == g.gamma
    np.testing.assert_array_equal(h.normal_axis, g.normal_axis)


def test_boundary_mask_covers_parabolic_boundary():
    g = build_grid(2, 4, 8, 2)
    b = g.boundary_mask()
    assert b[:, 0].all() and b[:, -1].all() and b[0, :].all() and b[-1, :].all()
    assert not b[1:-1, 1:-1].any()
    assert g.face_mask()[..., 0].all() and g.face_mask().sum() == 5


def test_distance_examples():
    p = ((0.1, 0.2), -0.5)
    assert anisotropic_distance(p, p, 0.5) == 0
    assert parabolic_distance(p, p) == 0
    assert anisotropic_distance(((0.0, 0.0), 0.0), ((0.3, 0.0), 0.0), 0.5) == pytest.approx(0.3)
    assert anisotropic_distance(((0.5,), 0.0), ((0.5,), 8.0), 0.5) == pytest.approx(4.0)
    assert parabolic_distance(((0.5,), 0.0), ((0.5,), 4.0)) == pytest.approx(2.0)
    assert parabolic_distance(((0.0,), 0.0), ((1.0,), 9.0)) == pytest.approx(4.0)


coord = st.floats(-1, 1)
time = st.floats(-1, 0)


@given(coord, coord, time, coord, coord, time, st.floats(0.01, 0.99))
def test_metric_order_for_short_times(a, b, t, c, d, s, gamma):
    # |t - s| <= 1 and 1/(2 - gamma) > 1/2 make the anisotropic time term the smaller one
    p, q = ((a, b), t), ((c, d), s)
    assert anisotropic_distance(p, q, gamma) <= parabolic_distance(p, q) + 1e-15


@given(coord, st.floats(1.0, 50.0), st.floats(0.01, 0.99))
def test_metric_order_for_long_times(a, lag, gamma):
    p, q = ((a,), -lag), ((0.0,), 0.0)
    assert anisotropic_distance(p, q, gamma) >= parabolic_distance(p, q) - 1e-12


def test_cylinder_full_domain():
    g = build_grid(2, 8, 16, 4, 2.0, 0.5, -1.0)
    reg = cylinder_nodes(g, ((0.0, 0.0), 0.0), 1.0)
    x1, xn = np.meshgrid(*g.axes, indexing="ij")
    ball = x1**2 + xn**2 < 1
    expect = (g.time_axis > -1)[:, None, None] & ball[None]
    np.testing.assert_array_equal(reg.mask, expect)


def test_cylinder_depth_and_membership():
    g = build_grid(1, 2, 32, 64, 2.0, 0.5, -1.0)
    reg = cylinder_nodes(g, ((0.0,), 0.0), 0.25)
    assert reg.depth == pytest.approx(1 / 8)
    for m, j in reg.node_indices():
        assert g.normal_axis[j] < 0.25
        assert -1 / 8 < g.time_axis[m] <= 0


def test_cylinder_empty_for_tiny_radius():
    g = build_grid(2, 8, 16, 4)
    # off-node center: nothing lies within 1e-6 of it
    reg = cylinder_nodes(g, ((0.1, 0.5), -0.1), 1e-6)
    assert reg.is_empty and reg.size == 0


def test_cylinder_rejects_bad_input():
    g = build_grid(2, 8, 16, 4)
    with pytest.raises(ValueError):
        cylinder_nodes(g, ((0.0, 0.0), 0.0), 0.0)
    with pytest.raises(ValueError):
        cylinder_nodes(g, ((0.0,), 0.0), 0.5)
    with pytest.raises(ValueError):
        cylinder_nodes(g, ((0.0, 0.0), 0.5), 0.5)


@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.floats(-0.9, 0.9), st.floats(-0.5, 0))
def test_cylinder_nesting(r1, r2, x0, t0):
    g = build_grid(2, 8, 16, 8, 2.0, 0.5, -1.0)
    small, big = sorted((r1, r2))
    a = cylinder_nodes(g, ((x0, 0.0), t0), small)
    b = cylinder_nodes(g, ((x0, 0.0), t0), big)
    assert not np.any(a.mask & ~b.mask)


@given(st.floats(-0.9, 0.9), st.floats(0.0, 0.9), st.floats(-0.9, 0.0))
def test_cylinder_nonempty_above_twice_spacing(x0, y0, t0):
    g = build_grid(2, 8, 16, 8, 2.0, 0.5, -1.0)
    r = 2.0 * max(g.max_spacing(), g.dt) * 1.0001
    assert not cylinder_nodes(g, ((x0, y0), t0), r).is_empty
