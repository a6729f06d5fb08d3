import math

import numpy as np
import pytest

from halfspace_stokes.core import GridField, make_grid, sample_field
from halfspace_stokes.mild_ns import (FITTED_GAMMA, Trajectory, bilinear_term,
                                      existence_horizon, horizon_shape,
                                      picard_solve)
from halfspace_stokes.uloc_norms import UlocSpec, uloc_norm


@pytest.fixture(scope="module")
def tiny_grid():
    return make_grid(2, 4.0, 16, 4.0, 128)


@pytest.fixture(scope="module")
def tiny_u0(tiny_grid):
    f = sample_field(tiny_grid, "div_free_bump", center=(2.0, 1.4), width=0.8)
    n = uloc_norm(f, UlocSpec(2.0, 1.0))
    return GridField(tiny_grid, (0.3 / n) * f.values)


class TestHorizonShape:
    def test_values(self):
        # d = 2, q = 2: T^{1/2 + 1/2} + T^{1/2 - 1/2} = T + 1
        assert horizon_shape(4.0, 2.0, 2) == pytest.approx(5.0)
        assert horizon_shape(0.0, 2.0, 2) == pytest.approx(1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            horizon_shape(-1.0, 2.0, 2)


class TestExistenceHorizon:
    def test_inverts_shape(self):
        gamma = FITTED_GAMMA[(2, 2.0)]
        T = existence_horizon(2.0, 2.0, 2, gamma)
        assert horizon_shape(T, 2.0, 2) == pytest.approx(gamma / 2.0, rel=1e-9)

    def test_monotone_decreasing_in_data_size(self):
        gamma = FITTED_GAMMA[(2, 2.0)]
        horizons = [existence_horizon(n, 2.0, 2, gamma)
                    for n in (1.0, 2.0, 4.0, 8.0, 16.0)]
        assert all(a > b for a, b in zip(horizons, horizons[1:]))

    def test_zero_data_lives_forever(self):
        assert existence_horizon(0.0, 2.0, 2, 1.0) == math.inf

    def test_critical_exponent_small_data_only(self):
        # q = d: no horizon once the data exceeds the threshold
        assert existence_horizon(10.0, 2.0, 2, 1.0) == 0.0

    def test_scaled_variant_quadratic_in_rho(self):
        gamma = FITTED_GAMMA[(2, 2.0)]
        for rho in (0.5, 1.0, 2.0, 4.0):
            assert existence_horizon(1.0, 2.0, 2, gamma, rho=rho) == rho**2

    def test_validation(self):
        with pytest.raises(ValueError):
            existence_horizon(-1.0, 2.0, 2, 1.0)
        with pytest.raises(ValueError):
            existence_horizon(1.0, 1.5, 2, 1.0)     # q < d
        with pytest.raises(ValueError):
            existence_horizon(1.0, 2.0, 2, 1.0, rho=0.0)


class TestTrajectory:
    def test_norms_recomputed(self, tiny_u0):
        traj = Trajectory((0.5,), [tiny_u0], 2.0)
        uloc, wsup, wgrad = traj.norms[0]
        assert uloc == pytest.approx(0.3, rel=1e-9)
        assert wsup > 0 and wgrad > 0
        assert traj.weighted_norm() == pytest.approx(uloc + wsup + wgrad)

    def test_rejects_bad_times(self, tiny_u0):
        with pytest.raises(ValueError):
            Trajectory((0.0,), [tiny_u0], 2.0)
        with pytest.raises(ValueError):
            Trajectory((1.0, 0.5), [tiny_u0, tiny_u0], 2.0)


class TestBilinear:
    def test_rejects_nonpositive_time(self, tiny_u0):
        with pytest.raises(ValueError):
            bilinear_term(0.0, tiny_u0, tiny_u0)

    def test_output_vanishes_at_boundary(self, tiny_u0):
        from halfspace_stokes.semigroup import build_contour
        b = bilinear_term(0.25, tiny_u0, tiny_u0,
                          build_contour(0.25, n_nodes=64, tol=1e-3))
        assert np.max(np.abs(b.values[1, ..., 0])) \
            < 1e-6 * np.max(np.abs(b.values))


class TestPicard:
    def test_small_data_converges(self, tiny_u0):
        traj = picard_solve(tiny_u0, 0.5, 2, 2.0, tol=1e-6, max_sweeps=4,
                            contour_nodes=64, contour_tol=1e-3)
        assert traj.verdict == "CONVERGED"
        gaps = [h["gap"] for h in traj.contraction_history]
        assert gaps[0] > gaps[-1]

    def test_graded_time_mesh(self, tiny_u0):
        traj = picard_solve(tiny_u0, 0.5, 2, 2.0, tol=1e-6, max_sweeps=1,
                            contour_nodes=64, contour_tol=1e-3)
        assert traj.times == (0.5 * 0.25, 0.5)

    def test_validation(self, tiny_u0):
        with pytest.raises(ValueError):
            picard_solve(tiny_u0, 0.0, 2, 2.0)
        with pytest.raises(ValueError):
            picard_solve(tiny_u0, 1.0, 0, 2.0)
