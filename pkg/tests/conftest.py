"""Shared fixtures: small grids and fields sized for fast unit tests."""

import numpy as np
import pytest

from halfspace_stokes.core import GridField, make_grid, sample_field


@pytest.fixture(scope="session")
def small_grid():
    """Coarse grid for structural checks (not accuracy checks)."""
    return make_grid(2, 4.0, 16, 4.0, 64)


@pytest.fixture(scope="session")
def medium_grid():
    """Grid fine enough that representation errors stay below ~1e-5."""
    return make_grid(2, 8.0, 32, 8.0, 256)


@pytest.fixture(scope="session")
def small_bump(small_grid):
    return sample_field(small_grid, "div_free_bump",
                        center=(2.0, 1.4), width=0.8)


@pytest.fixture(scope="session")
def medium_bump(medium_grid):
    return sample_field(medium_grid, "div_free_bump",
                        center=(4.0, 2.5), width=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(7)


def rel_max(a, b):
    """Relative max-norm deviation of two arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
