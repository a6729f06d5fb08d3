import math

import numpy as np
import pytest

from halfspace_stokes.core import (GridField, SectorPoint, make_grid,
                                   sample_field)
from halfspace_stokes.resolvent import (dirichlet_laplace_part,
                                        pressure_decay_profile,
                                        solve_resolvent)

LAM = SectorPoint(2.0, math.pi / 3)


@pytest.fixture(scope="module")
def solution(medium_grid, medium_bump):
    return solve_resolvent(LAM, medium_bump, tol=1e-2)


class TestSolveResolvent:
    def test_residuals_small(self, solution):
        d = solution.diagnostics
        assert d["pde_residual"] < 1e-10
        assert d["div_residual"] < 1e-6
        assert d["bc_residual"] < 1e-12

    def test_velocity_trace_vanishes(self, solution):
        trace = np.max(np.abs(solution.u.values[..., 0]))
        assert trace < 1e-10 * np.max(np.abs(solution.u.values))

    def test_rejects_non_solenoidal_data(self, medium_grid, rng):
        vals = rng.standard_normal(medium_grid.field_shape(2))
        with pytest.raises(ValueError, match="not solenoidal"):
            solve_resolvent(LAM, GridField(medium_grid, vals), tol=1e-2)

    def test_linearity(self, medium_grid, medium_bump):
        sol1 = solve_resolvent(LAM, medium_bump, tol=1e-2)
        scaled = GridField(medium_grid, 2.5 * medium_bump.values)
        sol2 = solve_resolvent(LAM, scaled, tol=1e-2)
        assert np.max(np.abs(sol2.u.values - 2.5 * sol1.u.values)) \
            < 1e-12 * np.max(np.abs(sol2.u.values))

    def test_diagnostics_keys(self, solution):
        for key in ("pde_residual", "div_residual", "bc_residual",
                    "data_divergence_defect", "tail_truncation_bound"):
            assert key in solution.diagnostics


class TestDirichletLaplacePart:
    def test_zero_boundary_trace(self, medium_bump):
        v = dirichlet_laplace_part(LAM, medium_bump)
        assert np.max(np.abs(v.values[..., 0])) \
            < 1e-12 * np.max(np.abs(v.values))

    def test_large_lambda_asymptote(self, medium_grid, medium_bump):
        # (lam - Laplace)^{-1} f -> f / lam for large |lam|
        big = SectorPoint(1e6, 0.0)
        v = dirichlet_laplace_part(big, medium_bump)
        interior = np.abs(1e6 * v.values[..., 5:-5]
                          - medium_bump.values[..., 5:-5])
        assert np.max(interior) < 1e-2 * np.max(np.abs(medium_bump.values))


class TestPressureDecayProfile:
    def test_slope_negative_for_localized_data(self, solution):
        profile, slope = pressure_decay_profile(solution, [2.0, 3.0, 4.0, 6.0])
        assert np.all(profile > 0)
        assert slope < -0.7

    def test_rejects_slab_above_grid(self, solution):
        with pytest.raises(ValueError):
            pressure_decay_profile(solution, [20.0])
