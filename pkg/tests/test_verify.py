import math

import numpy as np
import pytest

from halfspace_stokes.core import SectorPoint, make_grid, sample_field
from halfspace_stokes.resolvent import solve_resolvent
from halfspace_stokes.verify import (liouville_pressure_check,
                                     nonsteady_parasitic_residual,
                                     parasitic_residual,
                                     symbol_split_identity)


class TestSteadyParasitic:
    def test_residual_machine_zero(self):
        z = np.linspace(0.0, 10.0, 101)
        for lam in (SectorPoint(1.3, 0.7), SectorPoint(4.0, -2.0), 2.0 + 1j):
            assert parasitic_residual(lam, [1.0, -0.7], z) < 1e-12

    def test_rejects_zero_lambda(self):
        with pytest.raises(ValueError):
            parasitic_residual(0.0, [1.0], np.linspace(0, 1, 5))


class TestNonsteadyParasitic:
    def test_constant_forcing(self):
        res = nonsteady_parasitic_residual(
            lambda s: 1.0, np.linspace(0.3, 3.0, 5), [0.5, 1.5],
            D_prime=lambda s: 0.0)
        assert res < 1e-10

    def test_sinusoidal_forcing(self):
        res = nonsteady_parasitic_residual(
            math.sin, np.linspace(0.3, 3.0, 5), [0.5, 1.5],
            D_prime=math.cos)
        assert res < 1e-10

    def test_finite_difference_fallback(self):
        res = nonsteady_parasitic_residual(
            math.sin, np.linspace(0.5, 2.0, 3), [1.0])
        assert res < 1e-8

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            nonsteady_parasitic_residual(lambda s: 1.0, [1.0], [0.0])


class TestLiouvilleCheck:
    @pytest.fixture(scope="class")
    def solution(self):
        grid = make_grid(2, 8.0, 24, 8.0, 192)
        f = sample_field(grid, "div_free_bump", center=(4.0, 2.8), width=0.96)
        return solve_resolvent(SectorPoint(1.0, 0.0), f, tol=1e-2)

    def test_clean_solution_decays(self, solution):
        out = liouville_pressure_check(solution, [2.0, 3.0, 4.0, 5.0, 6.0])
        assert out["decaying"]
        assert not out["flagged_parasitic"]
        assert out["slope"] < -0.7

    def test_injected_parasitic_flagged(self, solution):
        out = liouville_pressure_check(solution, [2.0, 3.0, 4.0, 5.0, 6.0],
                                       parasitic_D=[1.0])
        assert out["flagged_parasitic"]
        assert out["slope"] > -0.7


class TestSymbolSplit:
    def test_identity_gap_tiny(self):
        rng = np.random.default_rng(11)
        xi = [rng.uniform(-5, 5, size=1) for _ in range(40)]
        out = symbol_split_identity(1.0, SectorPoint(2.0, 0.5), xi,
                                    [0.1, 1.0, 10.0])
        assert out["max_gap"] < 1e-14
        assert out["chi_monotone"]

    def test_theta_range_enforced(self):
        with pytest.raises(ValueError):
            symbol_split_identity(2.5, 1.0, [np.array([1.0])], [1.0])
