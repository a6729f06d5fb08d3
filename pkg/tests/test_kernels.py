import math

import numpy as np
import pytest
from scipy.special import k0

from halfspace_stokes.core import SectorPoint
from halfspace_stokes.kernels import (KERNEL_IDS, KernelQuery, bound_envelope,
                                      check_bound_ratio, eval_kernel,
                                      fit_decay_rate, scaling_gap,
                                      supported_bounds)


class TestKernelQuery:
    def test_rejects_unknown_kernel(self):
        with pytest.raises(ValueError):
            KernelQuery("bogus", (0, 0, 0), SectorPoint(1.0, 0.0), (1.0,), 0.5)

    def test_k1_carries_no_zd(self):
        with pytest.raises(ValueError):
            KernelQuery("k1", (0, 0, 1), SectorPoint(1.0, 0.0), (1.0,), 0.5)

    def test_rejects_negative_heights(self):
        with pytest.raises(ValueError):
            KernelQuery("k2", (0, 0, 0), SectorPoint(1.0, 0.0), (1.0,),
                        -0.5, 0.2)


class TestWholeSpaceOracle:
    """k1 at lambda = 1 is the fundamental solution of (1 - Laplace)."""

    def test_d2_bessel(self):
        lam = SectorPoint(1.0, 0.0)
        for yp, yd in ((0.5, 0.8), (2.0, 0.1), (0.3, 3.0)):
            r = math.hypot(yp, yd)
            val = eval_kernel(KernelQuery("k1", (0, 0, 0), lam, (yp,), yd)).value
            assert abs(val - k0(r) / (2 * math.pi)) < 1e-9 * abs(val)

    def test_d3_yukawa(self):
        lam = SectorPoint(1.0, 0.0)
        for y in ((0.4, 0.7, 0.9), (1.5, 0.2, 2.0)):
            r = math.sqrt(sum(v * v for v in y))
            val = eval_kernel(
                KernelQuery("k1", (0, 0, 0), lam, y[:2], y[2])).value
            oracle = math.exp(-r) / (4 * math.pi * r)
            assert abs(val - oracle) < 1e-9 * oracle


class TestScaling:
    def test_gap_small_for_all_kernels(self):
        lam = SectorPoint(4.0, 0.0)
        for kid in KERNEL_IDS:
            gap = scaling_gap(kid, lam, (0.8,), 0.6, 0.4)
            assert gap < 1e-8, (kid, gap)

    def test_gap_small_off_axis(self):
        lam = SectorPoint(2.0, math.pi / 3)
        assert scaling_gap("k2", lam, (0.5,), 0.9, 0.2) < 1e-8


class TestEnvelopes:
    def test_supported_bounds_cover_all_kernels(self):
        counts = {kid: len(supported_bounds(kid)) for kid in KERNEL_IDS}
        assert counts == {"k1": 6, "k2": 10, "r_prime": 9, "r_d": 9, "q": 14}

    def test_decay_rate_positive_and_cached(self):
        r1 = fit_decay_rate("k2", 2)
        r2 = fit_decay_rate("k2", 2)
        assert r1 == r2
        assert r1 > 0.01

    def test_envelope_positive(self):
        lam = SectorPoint(0.5, 1.0)
        env = bound_envelope("k2", (0, 0, 0), lam, (0.7,), 0.5, 0.3, 0.25)
        assert env > 0

    def test_check_bound_ratio_smoke(self):
        plan = {"n_samples": 32, "seed": 3, "dimension": 2, "tol": 1e-6}
        rep = check_bound_ratio("k1", (0, 0, 0), plan)
        assert math.isfinite(rep.fitted_constant)
        assert rep.fitted_constant > 0
        assert "c_decay" in rep.detail
