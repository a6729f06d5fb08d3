import math

import numpy as np
import pytest

from halfspace_stokes.core import GridField, make_grid, sample_field
from halfspace_stokes.semigroup import (apply_dirichlet_heat, apply_semigroup,
                                        build_contour, heat_reflection_oracle)


class TestBuildContour:
    def test_scalar_oracle_within_tolerance(self):
        c = build_contour(1.0)
        assert c.scalar_check_error <= 1e-8

    def test_closed_form_checks(self):
        c = build_contour(0.5)
        # entire integrand -> 0; double pole at the enclosed origin -> t
        assert c.detail["entire_check"] < 1e-5
        assert c.detail["residue_check"] < 1e-5

    def test_raises_when_nodes_insufficient(self):
        with pytest.raises(ValueError, match="scalar-oracle error"):
            build_contour(1.0, n_nodes=32, tol=1e-8)

    def test_time_rescaling_of_nodes(self):
        c1 = build_contour(1.0, n_nodes=128, tol=1e-5)
        c2 = build_contour(4.0, n_nodes=128, tol=1e-5)
        lam1 = np.array([n[0] for n in c1.nodes])
        lam2 = np.array([n[0] for n in c2.nodes])
        assert np.allclose(lam2, lam1 / 4.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_contour(0.0)
        with pytest.raises(ValueError):
            build_contour(1.0, eta=0.5)
        with pytest.raises(ValueError):
            build_contour(1.0, kappa=-1.0)

    def test_scalar_quadrature_general_pole(self):
        c = build_contour(2.0)
        val = c.quadrature(lambda lam: 1.0 / (lam + 3.0))
        assert abs(val - math.exp(-6.0)) < 1e-8


@pytest.fixture(scope="module")
def heat_grid():
    return make_grid(2, 4.0, 16, 12.0, 768)


@pytest.fixture(scope="module")
def heat_bump(heat_grid):
    return sample_field(heat_grid, "div_free_bump",
                        center=(2.0, 2.5), width=0.42)


class TestDirichletHeat:
    def test_matches_reflection_oracle(self, heat_grid, heat_bump):
        for t in (0.1, 1.0):
            dl = apply_dirichlet_heat(t, heat_bump)
            oracle = heat_reflection_oracle(t, heat_bump)
            dev = np.max(np.abs(dl.values - oracle.values)) \
                / np.max(np.abs(oracle.values))
            assert dev < 1e-6, t

    def test_oracle_short_time_identity(self, heat_bump):
        out = heat_reflection_oracle(1e-8, heat_bump)
        rel = np.max(np.abs(out.values - heat_bump.values)) \
            / np.max(np.abs(heat_bump.values))
        assert rel < 1e-3

    def test_oracle_rejects_nonpositive_time(self, heat_bump):
        with pytest.raises(ValueError):
            heat_reflection_oracle(0.0, heat_bump)


@pytest.fixture(scope="module")
def stokes_bump():
    # finer tangential lattice: the full Stokes solver gates on the
    # discrete divergence defect of the data
    grid = make_grid(2, 4.0, 48, 12.0, 768)
    return sample_field(grid, "div_free_bump", center=(2.0, 2.5), width=0.42)


class TestApplySemigroup:
    def test_contour_time_mismatch_rejected(self, stokes_bump):
        c = build_contour(1.0, n_nodes=128, tol=1e-5)
        with pytest.raises(ValueError, match="different time"):
            apply_semigroup(2.0, stokes_bump, c)

    def test_real_data_gives_real_output(self, stokes_bump):
        u = apply_semigroup(0.5, stokes_bump,
                            build_contour(0.5, n_nodes=128, tol=1e-5))
        assert np.max(np.abs(u.values.imag)) \
            < 1e-12 * np.max(np.abs(u.values))

    def test_short_time_near_identity(self, stokes_bump):
        t = 1e-3
        u = apply_semigroup(t, stokes_bump,
                            build_contour(t, n_nodes=128, tol=1e-5))
        rel = np.max(np.abs(u.values - stokes_bump.values)) \
            / np.max(np.abs(stokes_bump.values))
        assert rel < 0.05
