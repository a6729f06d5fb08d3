"""Fourier-side multipliers of the half-space Stokes resolvent.

Everything here is per tangential mode: given the spectral parameter
``lam`` in the sector and a tangential wave vector ``xi``, these
functions return the scalar factors that the per-mode solver integrates
against vertical profiles.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .core import SectorPoint

__all__ = [
    "DC_MODE_EXCLUDED",
    "OmegaValue",
    "MultiplierSet",
    "omega",
    "omega_array",
    "inv_omega_minus_xi",
    "nonlocal_factor",
    "resolvent_multipliers",
]

#: Marker returned in place of the pressure multiplier at the zero mode,
#: where the 1/|xi| factor is singular.  The DC pressure gradient on a
#: periodic box is a gauge choice, fixed to zero; callers must drop the mode.
DC_MODE_EXCLUDED = "dc-mode-excluded"


def _lam_value(lam) -> complex:
    return lam.value if isinstance(lam, SectorPoint) else complex(lam)


def omega(lam, xi) -> complex:
    """omega_lam(xi) = sqrt(lam + |xi|^2), principal branch (Re > 0)."""
    lam = _lam_value(lam)
    xi2 = float(np.dot(np.atleast_1d(xi), np.atleast_1d(xi)))
    return cmath.sqrt(lam + xi2)


def omega_array(lam, xi_norm2: np.ndarray) -> np.ndarray:
    """Vectorized omega over an array of squared tangential wavenumbers."""
    lam = _lam_value(lam)
    return np.sqrt(lam + np.asarray(xi_norm2, dtype=complex))


def inv_omega_minus_xi(lam, xi_norm):
    """1/(omega - |xi|) evaluated as (omega + |xi|)/lam.

    The direct form cancels catastrophically for |xi|^2 >> |lam|; the
    identity follows from omega^2 - |xi|^2 = lam.
    """
    lam = _lam_value(lam)
    w = omega_array(lam, np.asarray(xi_norm, dtype=float) ** 2)
    return (w + xi_norm) / lam


@dataclass(frozen=True)
class OmegaValue:
    """omega at one (lam, xi) sample, for sector lower-bound sweeps."""

    value: complex
    lam: SectorPoint
    xi_norm: float

    @property
    def sector_ratio(self) -> float:
        """Re(omega) / (|lam|^{1/2} + |xi|) — bounded below in the sector."""
        return self.value.real / (self.lam.modulus**0.5 + self.xi_norm)


@dataclass(frozen=True)
class MultiplierSet:
    """Per-mode scalar factors of the resolvent solution formulas.

    dl_whole / dl_reflected make up the Dirichlet-Laplace part, nl_scalar
    the pressure-driven nonlocal velocity part, pressure_scalar the
    pressure itself.  pressure_scalar is the string DC_MODE_EXCLUDED at
    xi = 0.
    """

    dl_whole: complex
    dl_reflected: complex
    nl_scalar: complex
    pressure_scalar: complex | str
    xi: tuple


def nonlocal_factor(lam, xi_norm, y_d):
    """(e^{-|xi| y_d} - e^{-omega y_d}) / (omega (omega - |xi|)).

    Uses the lam-identity for the difference quotient; at xi = 0 the
    expression has a finite limit which this form attains continuously.
    Broadcasts over arrays of xi_norm and y_d.
    """
    lam = _lam_value(lam)
    xi_norm = np.asarray(xi_norm, dtype=float)
    w = omega_array(lam, xi_norm**2)
    return (np.exp(-xi_norm * y_d) - np.exp(-w * y_d)) * (w + xi_norm) / (lam * w)


def resolvent_multipliers(lam, xi, y_d: float, z_d: float) -> MultiplierSet:
    """All per-mode factors at one (lam, xi, y_d, z_d) query point."""
    if y_d < 0 or z_d < 0:
        raise ValueError("y_d and z_d must be nonnegative")
    lamv = _lam_value(lam)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xin = float(np.linalg.norm(xi))
    w = cmath.sqrt(lamv + xin**2)
    dl_whole = cmath.exp(-w * abs(y_d - z_d)) / (2 * w)
    dl_reflected = cmath.exp(-w * (y_d + z_d)) / (2 * w)
    nl = complex(nonlocal_factor(lamv, xin, y_d) * np.exp(-w * z_d))
    if xin == 0.0:
        pressure = DC_MODE_EXCLUDED
    else:
        pressure = cmath.exp(-xin * y_d) * cmath.exp(-w * z_d) * (1.0 / xin + 1.0 / w)
    return MultiplierSet(dl_whole, dl_reflected, nl, pressure, tuple(xi))
