import numpy as np
import pytest

from degenlab.exact import ExactSolution
from degenlab.geometry import build_grid
from degenlab.problem import DataMismatchError, ExteriorData, FaceData, ProblemConfig, Source, compatibility_warning


def test_source_kinds():
    g = build_grid(2, 4, 8, 2)
    assert np.all(Source("constant", 2.0).at(g, 0.0) == 2.0)
    s = Source("callable", func=lambda c, t: c[-1] + t)
    np.testing.assert_allclose(s.at(g, -0.5)[0], g.normal_axis - 0.5)
    table = np.arange(np.prod(g.shape), dtype=float).reshape(g.shape)
    np.testing.assert_array_equal(Source("tabulated", table=table).at(g, -0.5), table[1])
    with pytest.raises(ValueError, match="no level"):
        Source("tabulated", table=table).at(g, -0.3)
    with pytest.raises(ValueError):
        Source("tabulated", table=table[:1]).at(g, 0.0)
    with pytest.raises(ValueError):
        Source("callable")
    assert Source().is_zero and not Source("constant", 1.0).is_zero


def test_face_kinds():
    g = build_grid(2, 4, 8, 2)
    x1 = g.tangential_axes[0]
    np.testing.assert_allclose(FaceData("linear", 1.0, (2.0,)).at(g, 0.0), 1 + 2 * x1)
    np.testing.assert_allclose(FaceData("power", beta=0.5, coefficient=2.0).at(g, 0.0), 2 * np.abs(x1) ** 1.5)
    np.testing.assert_allclose(FaceData("exact", exact=ExactSolution("phi", 0.5)).at(g, -0.5), -1.0)
    for beta in (0.0, 1.0, None):
        with pytest.raises(ValueError):
            FaceData("power", beta=beta)
    with pytest.raises(ValueError):
        FaceData("spline")


def test_time_independence():
    g = build_grid(1, 1, 8, 2)
    assert FaceData("zero").time_independent(g)
    assert FaceData("exact", exact=ExactSolution("psi", 0.5)).time_independent(g)
    assert not FaceData("exact", exact=ExactSolution("phi", 0.5)).time_independent(g)


def test_boundary_values_and_bump():
    g = build_grid(2, 4, 8, 2)
    c = ProblemConfig(0.5, face=FaceData("linear", offset=1.0), exterior=ExteriorData(bump=2.0))
    b = c.boundary_values(g, 0.0)
    assert np.all(b == 1.0)
    init = c.initial_values(g)
    assert np.all(init[..., 0] == 1.0) and np.all(init[..., -1] == pytest.approx(1.0))
    assert init[2, 4] == pytest.approx(1.0 + 2.0 * np.sin(np.pi * g.normal_axis[4]))
    c.check_compatibility(g)


def test_mismatch_detected():
    g = build_grid(2, 4, 8, 2)
    with pytest.raises(DataMismatchError, match="initial"):
        ProblemConfig(0.5, face=FaceData("linear", 1.0), exterior=ExteriorData("zero")).check_compatibility(g)
    table = np.zeros(g.shape)
    table[1, 0, :] = 1.0
    c = ProblemConfig(0.5, exterior=ExteriorData("tabulated", table=table))
    with pytest.raises(DataMismatchError, match="lateral"):
        c.check_compatibility(g)


def test_config_validation():
    for kw in ({"gamma": 1.0}, {"gamma": 0.5, "scheme": "rk4"}, {"gamma": 0.5, "cfl_safety": 0},
               {"gamma": 0.5, "linear_solve_tolerance": 0}):
        with pytest.raises(ValueError):
            ProblemConfig(**kw)


def test_tables_and_warning():
    g = build_grid(1, 1, 8, 2)
    ex = ExactSolution("phi", 0.5)
    c = ProblemConfig.from_exact(ex)
    d = c.dirichlet_table(g)
    np.testing.assert_allclose(d[0], ex(g.mesh(), -1.0))
    assert np.all(c.source_table(g) == 1.0)
    assert not compatibility_warning(c, g)
    homog = c.replace(source=Source())
    with pytest.warns(RuntimeWarning):
        assert compatibility_warning(homog, g)
