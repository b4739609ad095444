import numpy as np
import pytest
import scipy.sparse as sp

from degenlab.linsolve import LinearSolveError, RefinedSolver


def _matrix(n=50):
    main = np.full(n, 2.5)
    return sp.diags([-np.ones(n - 1), main, -np.ones(n - 1)], [-1, 0, 1]).tocsr()


def test_solves_to_tolerance():
    A = _matrix()
    b = np.linspace(-1, 1, 50)
    s = RefinedSolver(A, 1e-12)
    x = s.solve(b)
    assert np.max(np.abs(A @ x - b)) <= 2.5e-12
    assert s.last_residual <= 1e-12


def test_warm_start_reaches_tolerance():
    A = _matrix()
    b = np.ones(50)
    s = RefinedSolver(A, 1e-12, scaled=False)
    x = s.solve(b, x0=np.zeros(50))
    assert np.max(np.abs(A @ x - b)) <= 1e-12


def test_unreachable_tolerance_reports():
    A = _matrix()
    s = RefinedSolver(A, 1e-300, max_iterations=3)
    with pytest.raises(LinearSolveError) as exc:
        s.solve(np.ones(50))
    assert exc.value.iterations >= 1 and exc.value.residual > 0
    assert "iterations" in str(exc.value)
