import numpy as np
import pytest
from scipy.integrate import quad

from halfspace_stokes._vertical import (decay_integral, exp_moments,
                                        exp_moments4, gauss_cell_integral,
                                        integral_cells, linear_cells,
                                        reflected_integral, spline_cells,
                                        poly_decay_integral, two_sided_split)


class TestExpMoments:
    def test_closed_form_moderate_w(self):
        w, h = 1.3 + 0.4j, 0.7
        e0, e1 = exp_moments(np.array(w), h)
        ref0 = quad(lambda s: np.exp(-w * s).real, 0, h)[0] \
            + 1j * quad(lambda s: np.exp(-w * s).imag, 0, h)[0]
        ref1 = quad(lambda s: (s * np.exp(-w * s)).real, 0, h)[0] \
            + 1j * quad(lambda s: (s * np.exp(-w * s)).imag, 0, h)[0]
        assert complex(e0) == pytest.approx(ref0, rel=1e-12)
        assert complex(e1) == pytest.approx(ref1, rel=1e-12)

    def test_series_branch_matches_limit(self):
        # w h below the series cut: moments must approach h and h^2/2
        e0, e1 = exp_moments(np.array(1e-9 + 0j), 0.5)
        assert complex(e0) == pytest.approx(0.5, rel=1e-9)
        assert complex(e1) == pytest.approx(0.125, rel=1e-9)

    def test_higher_moments(self):
        w, h = 0.9 - 0.2j, 1.1
        _, _, e2, e3 = exp_moments4(np.array(w), h)
        for k, val in ((2, e2), (3, e3)):
            ref = quad(lambda s: (s**k * np.exp(-w * s)).real, 0, h)[0] \
                + 1j * quad(lambda s: (s**k * np.exp(-w * s)).imag, 0, h)[0]
            assert complex(val) == pytest.approx(ref, rel=1e-11)


class TestCells:
    def test_linear_cells_reproduce_nodes(self):
        z = np.array([0.0, 0.5, 1.25, 2.0])
        f = np.array([1.0, -0.5, 2.0, 0.0])
        cells = linear_cells(z, f)
        h = np.diff(z)
        assert np.allclose(cells[..., 0], f[:-1])
        assert np.allclose(cells[..., 0] + cells[..., 1] * h, f[1:])

    def test_spline_cells_exact_for_cubic(self):
        z = np.linspace(0.0, 2.0, 9)
        f = z**3 - 2 * z**2 + z
        cells = spline_cells(z, f)
        s = 0.3 * np.diff(z)          # interior point of every cell
        vals = sum(cells[..., k] * s**k for k in range(4))
        zq = z[:-1] + s
        assert np.allclose(vals, zq**3 - 2 * zq**2 + zq, atol=1e-12)

    def test_integral_cells_antiderivative(self):
        z = np.linspace(0.0, 1.0, 6)
        f = 2 * z + 1
        cells = linear_cells(z, f)
        _, nodes = integral_cells(z, cells, start=0.5)
        assert np.allclose(nodes, 0.5 + z**2 + z, atol=1e-14)


class TestConvolutions:
    def setup_method(self):
        self.z = np.linspace(0.0, 3.0, 601)
        self.f = np.sin(2.0 * self.z) * np.exp(-self.z)
        self.w = 1.2 + 0.8j

    def _ref(self, weight):
        re = quad(lambda s: (weight(s) * np.interp(s, self.z, self.f)).real,
                  0, 3, limit=400)[0]
        im = quad(lambda s: (weight(s) * np.interp(s, self.z, self.f)).imag,
                  0, 3, limit=400)[0]
        return re + 1j * im

    def test_decay_integral(self):
        val = complex(decay_integral(np.array(self.w), self.z, self.f))
        ref = self._ref(lambda s: np.exp(-self.w * s))
        assert val == pytest.approx(ref, rel=1e-5)

    def test_two_sided_split_sums_to_full_convolution(self):
        am, ap = two_sided_split(np.array(self.w), self.z, self.f)
        k = 200
        y = self.z[k]
        ref = self._ref(lambda s: np.exp(-self.w * np.abs(y - s)))
        assert complex(am[k] + ap[k]) == pytest.approx(ref, rel=1e-5)

    def test_reflected_integral(self):
        out = reflected_integral(np.array(self.w), self.z, self.f)
        k = 150
        ref = self._ref(lambda s: np.exp(-self.w * (self.z[k] + s)))
        assert complex(out[k]) == pytest.approx(ref, rel=1e-5)

    def test_poly_decay_matches_linear_route(self):
        cells = linear_cells(self.z, self.f)
        a = complex(poly_decay_integral(np.array(self.w), self.z, cells))
        b = complex(decay_integral(np.array(self.w), self.z, self.f))
        assert a == pytest.approx(b, rel=1e-12)


class TestGaussCellIntegral:
    def test_short_time_identity(self):
        z = np.linspace(0.0, 4.0, 801)
        f = np.exp(-((z - 2.0) ** 2))
        out = gauss_cell_integral(1e-8, z[300:500], z, f)
        assert np.max(np.abs(out - f[300:500])) < 1e-6

    def test_matches_quadrature(self):
        z = np.linspace(0.0, 4.0, 801)
        f = z * np.exp(-z)
        t, y = 0.3, 1.7
        out = complex(gauss_cell_integral(t, np.array([y]), z, f)[0])
        kern = lambda s: np.exp(-(y - s) ** 2 / (4 * t)) \
            / np.sqrt(4 * np.pi * t)
        ref = quad(lambda s: kern(s) * np.interp(s, z, f), 0, 4, limit=400)[0]
        assert out.real == pytest.approx(ref, rel=1e-5)
        assert abs(out.imag) < 1e-14

    def test_reflection_sign(self):
        z = np.linspace(0.0, 4.0, 801)
        f = z * np.exp(-z)
        t, y = 0.3, 0.9
        out = complex(gauss_cell_integral(t, np.array([y]), z, f, sign=-1)[0])
        kern = lambda s: np.exp(-(y + s) ** 2 / (4 * t)) \
            / np.sqrt(4 * np.pi * t)
        ref = quad(lambda s: kern(s) * np.interp(s, z, f), 0, 4, limit=400)[0]
        assert out.real == pytest.approx(ref, rel=1e-5)
