import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenlab.exact import ExactSolution
from degenlab.geometry import build_grid
from degenlab.problem import DataMismatchError, ExteriorData, FaceData, ProblemConfig, Source
from degenlab.solver import (
    coarse_comparison_grid,
    check_discrete_comparison,
    implicit_matrix,
    march_to_steady,
    solve_implicit_step,
    solve_problem,
    stable_dt,
    step_explicit,
)


def loop_step(u, dt, gamma, nodes, f, left, right):
    """Reference forward-Euler step on a 1-D graded axis, one node at a time."""
    out = list(u)
    for j in range(1, len(nodes) - 1):
        hm = nodes[j] - nodes[j - 1]
        hp = nodes[j + 1] - nodes[j]
        lap = 2.0 / (hm + hp) * ((u[j + 1] - u[j]) / hp - (u[j] - u[j - 1]) / hm)
        out[j] = u[j] + dt * (nodes[j] ** gamma * lap + f)
    out[0], out[-1] = left, right
    return np.array(out)


def test_stable_dt_uniform_1d():
    g = build_grid(1, 1, 16, 1, 1.0, 0.5)
    h = 1 / 16
    dt = stable_dt(g, 0.5, 0.8)
    # the largest interior node x = 1 - h dominates
    assert dt == pytest.approx(0.8 * h**2 / (2 * (1 - h) ** 0.5), rel=1e-12)
    assert 0.8 * h**2 / 2 <= dt <= 0.8 * h**2 / 2 * 1.04


def test_stable_dt_scaling_and_gamma():
    g1 = build_grid(1, 1, 16, 1, 1.0, 0.5)
    g2 = build_grid(1, 1, 32, 1, 1.0, 0.5)
    ratio = stable_dt(g2, 0.5) / stable_dt(g1, 0.5)
    assert ratio == pytest.approx(0.25 * ((1 - 1 / 16) / (1 - 1 / 32)) ** 0.5, rel=1e-12)
    assert stable_dt(g1, 0.75) > stable_dt(g1, 0.5) > stable_dt(g1, 0.25)
    with pytest.raises(ValueError):
        stable_dt(g1, 0.5, 0.0)
    with pytest.raises(ValueError):
        stable_dt(g1, 0.5, 1.5)


def _zero_config(gamma=0.5, **kw):
    return ProblemConfig(gamma, exterior=ExteriorData("zero"), **kw)


def _linear_config(g):
    xn = np.broadcast_to(g.normal_coordinate(), g.spatial_shape)
    table = np.broadcast_to(2.0 + 5.0 * xn, g.shape).copy()
    return ProblemConfig(0.5, face=FaceData("linear", offset=2.0), exterior=ExteriorData("tabulated", table=table))


def test_step_explicit_invariants():
    g = build_grid(2, 6, 12, 1, 2.0, 0.5)
    dt = stable_dt(g, 0.5)
    c = ProblemConfig(0.5, face=FaceData("linear", offset=3.0))
    np.testing.assert_array_equal(step_explicit(np.full(g.spatial_shape, 3.0), dt, 0.0, c, g), 3.0)
    g = build_grid(2, 6, 12, 1, 2.0, 0.5, -dt)
    cl = _linear_config(g)
    lin = cl.exterior.table[0]
    np.testing.assert_allclose(step_explicit(lin, dt, -dt, cl, g), lin, atol=1e-13)
    with pytest.raises(ValueError):
        step_explicit(lin, 1.01 * dt, -dt, cl, g)


def test_step_explicit_square():
    g = build_grid(1, 1, 16, 1, 2.0, 0.5)
    x = g.normal_axis
    dt = 0.5 * stable_dt(g, 0.5)
    new = step_explicit(x**2, dt, 0.0, _zero_config(), g)
    np.testing.assert_allclose(new[1:-1], x[1:-1] ** 2 + 2 * dt * x[1:-1] ** 0.5, rtol=1e-12)
    assert new[0] == 0 and new[-1] == 0


@given(st.floats(0.05, 0.95), st.floats(1.0, 4.0), st.integers(0, 2**31))
def test_step_explicit_matches_loop(gamma, q, seed):
    g = build_grid(1, 1, 10, 1, q, gamma)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1, 1, g.spatial_shape)
    dt = stable_dt(g, gamma, 0.9)
    c = ProblemConfig(gamma, source=Source("constant", 0.3), exterior=ExteriorData("zero"))
    ref = loop_step(u, dt, gamma, list(g.normal_axis), 0.3, 0.0, 0.0)
    np.testing.assert_allclose(step_explicit(u, dt, 0.0, c, g), ref, rtol=1e-13, atol=1e-14)


def test_explicit_order_preserving_exhaustive():
    # every ordered pair of 0/1 interior states on a 9-node axis
    g = build_grid(1, 1, 8, 1, 2.0, 0.5)
    dt = stable_dt(g, 0.5)
    c = _zero_config()
    states = [np.array((0,) + s + (0,), float) for s in itertools.product((0, 1), repeat=7)]
    stepped = [step_explicit(s, dt, 0.0, c, g) for s in states]
    for (a, sa), (b, sb) in itertools.product(zip(states, stepped), repeat=2):
        if np.all(a <= b):
            assert np.all(sa <= sb)


@given(st.integers(0, 2**31), st.floats(0.05, 0.95))
def test_explicit_monotone_under_perturbation(seed, gamma):
    g = build_grid(2, 4, 8, 1, 2.0, gamma)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1, 1, g.spatial_shape)
    v = u + rng.uniform(0, 1, g.spatial_shape)
    c = _zero_config(gamma)
    dt = stable_dt(g, gamma)
    assert np.all(step_explicit(u, dt, 0.0, c, g) <= step_explicit(v, dt, 0.0, c, g) + 1e-15)


@pytest.mark.parametrize("gamma", [0.25, 0.75])
def test_implicit_matrix_is_m_matrix(gamma):
    g = build_grid(2, 5, 9, 1, 2.0, gamma)
    A = implicit_matrix(g, gamma, 0.3).toarray()
    diag = np.diag(A)
    off = A - np.diag(diag)
    assert np.all(off <= 0)
    assert np.all(diag >= np.abs(off).sum(axis=1) - 1e-12)
    # rows whose stencil reaches a Dirichlet node are strictly dominant
    bmask = g.boundary_mask().ravel()
    touches = (np.abs(off[:, bmask]).sum(axis=1) > 0) & ~bmask
    assert np.all(diag[touches] > np.abs(off[touches]).sum(axis=1) + 1e-12)


def test_implicit_step_invariants():
    g = build_grid(2, 6, 12, 1, 2.0, 0.5)
    c = ProblemConfig(0.5, face=FaceData("linear", offset=3.0))
    out = solve_implicit_step(np.full(g.spatial_shape, 3.0), 0.1, 0.0, c, g)
    np.testing.assert_allclose(out, 3.0, atol=1e-12)
    g = build_grid(2, 6, 12, 2, 2.0, 0.5)
    cl = _linear_config(g)
    lin = cl.exterior.table[0]
    np.testing.assert_allclose(solve_implicit_step(lin, 0.5, -1.0, cl, g), lin, atol=1e-11)
    with pytest.raises(ValueError):
        solve_implicit_step(lin, 0.0, -1.0, cl, g)


def test_implicit_step_on_phi():
    errs = []
    for n in (16, 32, 64):
        ex = ExactSolution("phi", 0.5)
        g = build_grid(1, 1, n, 1, 2.0, 0.5)
        dt = 1.0 / n
        c = ProblemConfig.from_exact(ex)
        coords = g.mesh()
        out = solve_implicit_step(ex(coords, -dt), dt, -dt, c, g)
        errs.append(np.max(np.abs(out - ex(coords, 0.0))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-3


def test_zero_data_gives_zero():
    g = build_grid(2, 4, 8, 4)
    for scheme in ("implicit", "explicit"):
        gg = coarse_comparison_grid(0.5, 2, 8, 4) if scheme == "explicit" else g
        u = solve_problem(_zero_config(scheme=scheme), gg)
        assert not np.any(u.values)


@pytest.mark.parametrize("kind", ["phi", "psi"])
def test_manufactured_refinement(kind):
    errs = []
    for n in (16, 32, 64):
        ex = ExactSolution(kind, 0.5)
        g = build_grid(2, n // 4, n, n // 4, 2.0, 0.5)
        u = solve_problem(ProblemConfig.from_exact(ex), g)
        errs.append(np.max(np.abs(u.values[-1] - ex(g.mesh(), 0.0))))
    assert errs[0] > errs[1] > errs[2]


def test_discrete_maximum_principle():
    g = build_grid(2, 6, 12, 20, 2.0, 0.5)
    rng = np.random.default_rng(1)
    table = rng.uniform(-1, 1, g.shape)
    c = ProblemConfig(0.5, face=FaceData("tabulated", table=table),
                      exterior=ExteriorData("tabulated", table=table))
    with pytest.warns(RuntimeWarning):
        u = solve_problem(c, g, check_compatibility=False).values
    rel = np.zeros(g.shape, bool)
    rel[0] = True
    rel[1:] = g.boundary_mask()
    assert u.max() <= u[rel].max() + 1e-12
    assert u.min() >= u[rel].min() - 1e-12


def test_rejects_mismatched_data():
    g = build_grid(2, 4, 8, 4)
    c = ProblemConfig(0.5, face=FaceData("linear", offset=1.0), exterior=ExteriorData("zero"))
    with pytest.raises(DataMismatchError):
        solve_problem(c, g)


def test_explicit_rejects_large_step():
    g = build_grid(1, 1, 16, 2)
    with pytest.raises(ValueError, match="n_time"):
        solve_problem(_zero_config(scheme="explicit"), g)


def test_warns_on_time_dependent_face():
    g = build_grid(1, 1, 8, 2)
    ex = ExactSolution("phi", 0.5)
    c = ProblemConfig(0.5, face=FaceData("exact", exact=ex), exterior=ExteriorData("exact", exact=ex))
    with pytest.warns(RuntimeWarning, match="g_t"):
        solve_problem(c, g)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_problem(ProblemConfig.from_exact(ex), g)


def test_march_to_steady_linear():
    g = build_grid(2, 4, 16, 1, 2.0, 0.5)
    c = ProblemConfig(0.5, face=FaceData("linear", offset=1.0, gradient=(2.0,)))
    u = march_to_steady(c, g)
    x1 = np.broadcast_to(g.mesh()[0], g.spatial_shape)
    np.testing.assert_allclose(u, 1.0 + 2.0 * x1, atol=1e-8)


def test_comparison_constants():
    g = coarse_comparison_grid(0.5, 1, 8)
    cu = ProblemConfig(0.5, scheme="explicit", exterior=ExteriorData("zero"))
    cv = ProblemConfig(0.5, scheme="explicit", face=FaceData("linear", offset=1.0))
    r = check_discrete_comparison(cu, cv, g, trials=1)
    assert r.max_violation == 0 and r.passed


def test_comparison_source_ordering_brute_force():
    g = coarse_comparison_grid(0.5, 1, 8)
    cu = _zero_config(scheme="explicit")
    cv = cu.replace(source=Source("constant", 1.0))
    u = solve_problem(cu, g).values
    v = solve_problem(cv, g).values
    assert g.spatial_shape[0] <= 10
    # independent loop march for the f = 1 problem
    w = np.zeros(g.spatial_shape)
    for m in range(1, g.shape[0]):
        w = loop_step(w, g.dt, 0.5, list(g.normal_axis), 1.0, 0.0, 0.0)
        np.testing.assert_allclose(v[m], w, rtol=1e-12, atol=1e-15)
    assert np.all(u <= v)


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
def test_comparison_random_instances(scheme):
    g = coarse_comparison_grid(0.5, 1, 8)
    cu = _zero_config(scheme=scheme)
    cv = cu.replace(source=Source("constant", 1.0))
    r = check_discrete_comparison(cu, cv, g, trials=100, seed=3)
    assert r.instances == 100 and r.passed
    assert r.to_dict()["pass"] is True


def test_comparison_rejects_unordered():
    g = coarse_comparison_grid(0.5, 1, 8)
    cu = _zero_config(scheme="explicit")
    cv = cu.replace(source=Source("constant", -1.0))
    with pytest.raises(ValueError, match="unordered"):
        check_discrete_comparison(cu, cv, g, trials=1)
    with pytest.raises(ValueError):
        check_discrete_comparison(cu, cu.replace(scheme="implicit"), g, trials=1)
