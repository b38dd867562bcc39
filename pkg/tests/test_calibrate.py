import numpy as np
import pytest

from ndasnr.calibrate import (
    SimplexOptions,
    default_grid,
    fit_h_constants,
    h_fit_mse,
    max_h_gap,
    nelder_mead,
)
from ndasnr.specfun import PAPER_H, h_approx, h_exact


def test_quadratic_1d():
    r = nelder_mead(lambda x: (x[0] - 3.0) ** 2, [0.0])
    assert r.converged
    assert abs(r.x[0] - 3.0) < 1e-6


def test_rosenbrock():
    def rosen(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    r = nelder_mead(rosen, [-1.2, 1.0])
    assert r.fun < 1e-8
    assert r.evals <= SimplexOptions().max_evals
    assert np.allclose(r.x, [1.0, 1.0], atol=1e-4)


def test_start_at_minimum():
    # flat near x0 beyond the simplex: converged on the first check
    r = nelder_mead(lambda x: 0.0 if np.all(np.abs(x - 2.0) < 1) else 1.0, [2.0, 2.0])
    assert np.array_equal(r.x, [2.0, 2.0])
    assert r.evals <= 2 + 2


def test_budget_exhaustion_is_reported():
    r = nelder_mead(lambda x: (x[0] - 3.0) ** 2 + x[1] ** 2, [0.0, 1.0], SimplexOptions(max_evals=10))
    assert not r.converged and r.evals <= 12


def test_bad_start_and_options():
    with pytest.raises(ValueError):
        nelder_mead(lambda x: float("nan"), [0.0])
    with pytest.raises(ValueError):
        SimplexOptions(contraction=1.5)
    with pytest.raises(ValueError):
        SimplexOptions(expansion=0.5)


def test_paper_constants_fidelity():
    assert max_h_gap(PAPER_H, default_grid()) <= 1e-2


def test_fit_recovers_paper_constants():
    res = fit_h_constants()
    assert res.converged and not res.underdetermined
    assert res.mse <= 1e-5
    assert res.mse <= res.reference_mse
    assert all(abs(d) <= 0.05 for d in res.deviation())


def test_single_point_fit():
    grid = np.array([1.0])
    res = fit_h_constants(grid)
    assert res.underdetermined
    assert abs(float(h_approx(1.0, res.constants)) - float(h_exact(1.0))) < 1e-10


def test_penalty_for_invalid_signs():
    g = default_grid(10)
    assert h_fit_mse((0.6, 1.5, 0.1), g) == 1e6


def test_grid_validation():
    with pytest.raises(ValueError):
        fit_h_constants(np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        default_grid(0)
