import cmath
import math

import numpy as np
import pytest

from halfspace_stokes.core import SectorPoint
from halfspace_stokes.symbols import (DC_MODE_EXCLUDED, OmegaValue,
                                      inv_omega_minus_xi, nonlocal_factor,
                                      omega, omega_array,
                                      resolvent_multipliers)


class TestOmega:
    def test_principal_branch_positive_real_part(self):
        for arg in (-2.7, -1.0, 0.0, 1.0, 2.7):
            lam = SectorPoint(3.0, arg)
            for xi in (0.0, 0.5, 10.0):
                w = omega(lam, xi)
                assert w.real > 0
                assert w**2 == pytest.approx(lam.value + xi**2)

    def test_array_agrees_with_scalar(self):
        lam = 1.0 + 2.0j
        xi2 = np.array([0.0, 1.0, 4.0])
        arr = omega_array(lam, xi2)
        for v, x2 in zip(arr, xi2):
            assert v == pytest.approx(omega(lam, math.sqrt(x2)))


class TestInvOmegaMinusXi:
    def test_matches_direct_form_at_moderate_xi(self):
        lam = 2.0 * cmath.exp(0.7j)
        for xi in (0.0, 0.5, 2.0):
            w = omega(lam, xi)
            direct = 1.0 / (w - xi) if xi > 0 else 1.0 / w
            assert complex(inv_omega_minus_xi(lam, xi)) \
                == pytest.approx(direct, rel=1e-12)

    def test_no_cancellation_at_large_xi(self):
        # direct subtraction loses all digits when |xi|^2 >> |lam|;
        # the lam-identity form stays at the asymptote 2 xi / lam
        lam = 1.0 + 0.0j
        xi = 1e8
        val = complex(inv_omega_minus_xi(lam, xi))
        assert val == pytest.approx(2.0 * xi / lam, rel=1e-10)


class TestNonlocalFactor:
    def test_continuous_at_zero_mode(self):
        lam = 1.5 * cmath.exp(0.3j)
        y = 0.8
        at0 = complex(nonlocal_factor(lam, 0.0, y))
        limit = (1.0 - cmath.exp(-cmath.sqrt(lam) * y)) / lam
        assert at0 == pytest.approx(limit, rel=1e-12)
        near0 = complex(nonlocal_factor(lam, 1e-8, y))
        assert abs(near0 - at0) < 1e-7 * abs(at0)

    def test_vanishes_at_boundary(self):
        assert complex(nonlocal_factor(2.0, 1.0, 0.0)) == 0.0


class TestResolventMultipliers:
    def test_dc_pressure_excluded(self):
        ms = resolvent_multipliers(SectorPoint(1.0, 0.0), [0.0], 0.5, 0.3)
        assert ms.pressure_scalar == DC_MODE_EXCLUDED

    def test_dl_parts_whole_vs_reflected(self):
        lam = SectorPoint(2.0, 0.5)
        ms = resolvent_multipliers(lam, [1.0], 0.7, 0.2)
        w = omega(lam, 1.0)
        assert ms.dl_whole == pytest.approx(cmath.exp(-w * 0.5) / (2 * w))
        assert ms.dl_reflected == pytest.approx(cmath.exp(-w * 0.9) / (2 * w))

    def test_rejects_negative_heights(self):
        with pytest.raises(ValueError):
            resolvent_multipliers(SectorPoint(1.0, 0.0), [1.0], -0.1, 0.0)


class TestOmegaValue:
    def test_sector_ratio_bounded_below(self):
        # Re omega >= c (|lam|^{1/2} + |xi|) throughout the sector
        eps = math.pi / 8
        worst = math.inf
        for arg in np.linspace(-(math.pi - eps), math.pi - eps, 9):
            for mod in (0.01, 1.0, 100.0):
                lam = SectorPoint(mod, arg, eps)
                for xi in (0.0, 0.3, 5.0):
                    ov = OmegaValue(omega(lam, xi), lam, xi)
                    worst = min(worst, ov.sector_ratio)
        assert worst > 0.1
