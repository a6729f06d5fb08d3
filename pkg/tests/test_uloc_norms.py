import math

import numpy as np
import pytest

from halfspace_stokes.core import GridField, make_grid, sample_field
from halfspace_stokes.uloc_norms import (UlocSpec, gradient_field, kato_norm,
                                         uloc_norm)


class TestUlocSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            UlocSpec(0.5, 1.0)
        with pytest.raises(ValueError):
            UlocSpec(2.0, 0.0)


class TestUlocNorm:
    def test_constant_field(self, small_grid):
        f = GridField(small_grid,
                      np.full(small_grid.field_shape(1), 3.0, dtype=complex))
        # each unit cube contributes (3^q * rho^d)^{1/q}
        val = uloc_norm(f, UlocSpec(2.0, 1.0))
        assert val == pytest.approx(3.0, rel=1e-12)

    def test_sup_norm(self, small_bump):
        spec = UlocSpec(math.inf, 1.0)
        assert uloc_norm(small_bump, spec) \
            == pytest.approx(np.max(np.sqrt(
                np.sum(np.abs(small_bump.values) ** 2, axis=0))))

    def test_localized_data_insensitive_to_box_size(self):
        # uloc norms see only the worst cube, not the global mass
        vals = {}
        for L, n in ((4.0, 32), (8.0, 64)):
            g = make_grid(2, L, n, 4.0, 128)
            u = sample_field(g, "div_free_bump", center=(2.0, 1.4), width=0.5)
            vals[L] = uloc_norm(u, UlocSpec(2.0, 1.0))
        assert vals[4.0] == pytest.approx(vals[8.0], rel=1e-6)

    def test_rho_must_tile_box(self, small_grid, small_bump):
        with pytest.raises(ValueError, match="tile"):
            uloc_norm(small_bump, UlocSpec(2.0, 0.7))

    def test_monotone_in_rho(self, small_bump):
        n1 = uloc_norm(small_bump, UlocSpec(1.0, 1.0))
        n2 = uloc_norm(small_bump, UlocSpec(1.0, 2.0))
        assert n2 >= n1


class TestGradientField:
    def test_plane_wave_tangential_derivative(self, small_grid):
        x = small_grid.tangential_coords()[0]
        k = 2 * math.pi / small_grid.box_length
        vals = np.exp(1j * k * x)[..., None] \
            * np.ones(small_grid.n_vertical)
        f = GridField(small_grid, vals[None])
        g = gradient_field(f)
        assert np.max(np.abs(g.values[0] - 1j * k * f.values[0])) < 1e-12
        assert np.max(np.abs(g.values[1])) < 1e-12

    def test_vertical_derivative_linear_profile(self, small_grid):
        z = small_grid.znodes()
        vals = np.broadcast_to(2.0 * z, small_grid.field_shape(1)[1:])
        f = GridField(small_grid, vals[None].astype(complex))
        g = gradient_field(f)
        assert np.max(np.abs(g.values[1] - 2.0)) < 1e-10

    def test_component_layout(self, small_bump):
        g = gradient_field(small_bump)
        assert g.components == 4      # (d1 u1, dz u1, d1 u2, dz u2)


class TestKatoNorm:
    def test_matches_manual_triple(self, small_bump):
        traj = [(0.5, small_bump)]
        spec = UlocSpec(2.0, 1.0)
        sup = UlocSpec(math.inf, 1.0)
        manual = uloc_norm(small_bump, spec) \
            + 0.5 ** 0.5 * uloc_norm(small_bump, sup) \
            + 0.5 ** 0.5 * uloc_norm(gradient_field(small_bump), spec)
        assert kato_norm(traj, 2.0, 2) == pytest.approx(manual)

    def test_rejects_bad_times(self, small_bump):
        with pytest.raises(ValueError):
            kato_norm([(0.0, small_bump)], 2.0, 2)
        with pytest.raises(ValueError):
            kato_norm([(1.0, small_bump), (0.5, small_bump)], 2.0, 2)
        with pytest.raises(ValueError):
            kato_norm([], 2.0, 2)
