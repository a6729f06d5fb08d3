"""Grids, fields and configuration shared by every solver component.

The domain is a half-space truncated to a periodic tangential box of
length ``L`` (exact discrete Fourier transform in the tangential
directions) times a finite vertical interval ``[0, H]`` with graded
cell boundaries.  Vertical data are interpreted as continuous piecewise
linear functions on the cells, which lets downstream operators integrate
exponential-times-linear products in closed form.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = [
    "SectorPoint",
    "HalfSpaceGrid",
    "GridField",
    "SpectralField",
    "SolverConfig",
    "make_grid",
    "to_spectral",
    "to_physical",
    "sample_field",
    "field_to_csv",
]


@dataclass(frozen=True)
class SectorPoint:
    """A spectral parameter constrained to the sector |arg| <= pi - epsilon."""

    modulus: float
    argument: float
    epsilon: float = math.pi / 8

    def __post_init__(self):
        if not self.modulus > 0:
            raise ValueError("sector point needs positive modulus")
        if not 0 < self.epsilon < math.pi:
            raise ValueError("sector margin must lie in (0, pi)")
        if abs(self.argument) > math.pi - self.epsilon + 1e-15:
            raise ValueError(
                f"argument {self.argument} outside sector with margin {self.epsilon}"
            )

    @property
    def value(self) -> complex:
        return self.modulus * cmath.exp(1j * self.argument)

    @classmethod
    def from_complex(cls, lam: complex, epsilon: float = math.pi / 8) -> "SectorPoint":
        return cls(abs(lam), cmath.phase(lam), epsilon)

    def conjugate(self) -> "SectorPoint":
        return SectorPoint(self.modulus, -self.argument, self.epsilon)


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Periodic tangential lattice times graded vertical nodes."""

    dimension: int
    box_length: float
    n_tangential: int
    vertical_nodes: tuple[float, ...]
    grading: float = 1.0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.n_tangential < 4 or self.n_tangential % 2 != 0:
            raise ValueError("n_tangential must be even and >= 4")
        nodes = np.asarray(self.vertical_nodes)
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("vertical nodes must start at 0 and increase strictly")

    @property
    def d_tangential(self) -> int:
        return self.dimension - 1

    @property
    def height(self) -> float:
        return self.vertical_nodes[-1]

    @property
    def n_vertical(self) -> int:
        return len(self.vertical_nodes)

    def wavenumbers(self) -> np.ndarray:
        """1-D tangential wavenumbers 2*pi*k/L in FFT ordering."""
        n, L = self.n_tangential, self.box_length
        return 2.0 * math.pi * np.fft.fftfreq(n, d=1.0 / n) / L

    def wavenumber_mesh(self) -> np.ndarray:
        """Array of shape (d-1, n, ..., n) with the tangential wave vector."""
        k = self.wavenumbers()
        if self.d_tangential == 1:
            return k[None, :]
        kx, ky = np.meshgrid(k, k, indexing="ij")
        return np.stack([kx, ky])

    def tangential_coords(self) -> np.ndarray:
        """Array of shape (d-1, n, ..., n) with node coordinates in the box."""
        x = np.arange(self.n_tangential) * (self.box_length / self.n_tangential)
        if self.d_tangential == 1:
            return x[None, :]
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return np.stack([xx, yy])

    def znodes(self) -> np.ndarray:
        return np.asarray(self.vertical_nodes)

    def tangential_shape(self) -> tuple[int, ...]:
        return (self.n_tangential,) * self.d_tangential

    def field_shape(self, components: int) -> tuple[int, ...]:
        return (components,) + self.tangential_shape() + (self.n_vertical,)


def make_grid(dimension, box_length, n_tangential, height, n_cells, grading=1.0):
    """Build a grid whose vertical cell widths grow geometrically by `grading`."""
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if n_tangential % 2 != 0 or n_tangential < 4:
        raise ValueError("n_tangential must be even and >= 4")
    if height <= 0:
        raise ValueError("height must be positive")
    if n_cells < 2:
        raise ValueError("need at least 2 vertical cells")
    if grading < 1.0:
        raise ValueError("grading must be >= 1")
    if grading == 1.0:
        nodes = np.linspace(0.0, height, n_cells + 1)
    else:
        ratios = grading ** np.arange(n_cells)
        widths = ratios * (height / ratios.sum())
        nodes = np.concatenate([[0.0], np.cumsum(widths)])
        nodes[-1] = height
    return HalfSpaceGrid(dimension, float(box_length), int(n_tangential),
                         tuple(float(z) for z in nodes), float(grading))


@dataclass(frozen=True)
class GridField:
    """Physical-space field: complex values indexed (component, x', z-node)."""

    grid: HalfSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", v)
        ncomp = v.shape[0]
        if v.shape != self.grid.field_shape(ncomp):
            raise ValueError(f"field shape {v.shape} inconsistent with grid")

    @property
    def components(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SpectralField:
    """Tangential Fourier coefficients of a GridField, same index layout."""

    grid: HalfSpaceGrid
    modal_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.modal_values, dtype=complex)
        object.__setattr__(self, "modal_values", v)
        ncomp = v.shape[0]
        if v.shape != self.grid.field_shape(ncomp):
            raise ValueError(f"spectral shape {v.shape} inconsistent with grid")

    @property
    def components(self) -> int:
        return self.modal_values.shape[0]


def _tangential_axes(grid: HalfSpaceGrid) -> tuple[int, ...]:
    return tuple(range(1, 1 + grid.d_tangential))


def to_spectral(f: GridField) -> SpectralField:
    """Forward tangential DFT, normalized to Fourier-series coefficients."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("field contains non-finite entries")
    axes = _tangential_axes(f.grid)
    n = f.grid.n_tangential
    modal = np.fft.fftn(f.values, axes=axes) / float(n) ** len(axes)
    return SpectralField(f.grid, modal)


def to_physical(f: SpectralField) -> GridField:
    """Inverse of :func:`to_spectral`."""
    if not np.all(np.isfinite(f.modal_values)):
        raise ValueError("spectral field contains non-finite entries")
    axes = _tangential_axes(f.grid)
    n = f.grid.n_tangential
    values = np.fft.ifftn(f.modal_values * float(n) ** len(axes), axes=axes)
    return GridField(f.grid, values)


def _bump(r2: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-r2 / width**2)


def _vertical_profile(z: np.ndarray, center: float, width: float):
    """s(z) = z^2 exp(-((z-c)/w)^2) and its first derivative; s(0)=s'(0)=0."""
    g = np.exp(-(((z - center) / width) ** 2))
    s = z**2 * g
    ds = (2 * z - z**2 * 2 * (z - center) / width**2) * g
    return s, ds


def sample_field(grid: HalfSpaceGrid, spec: str, **params) -> GridField:
    """Evaluate a named closed-form field from the built-in catalogue."""
    d = grid.dimension
    x = grid.tangential_coords()
    z = grid.znodes()
    tshape = grid.tangential_shape()
    L = grid.box_length

    if spec == "zero":
        ncomp = params.get("components", d)
        return GridField(grid, np.zeros(grid.field_shape(ncomp), dtype=complex))

    if spec == "gaussian_bump":
        # Scalar bump, periodically wrapped in the tangential directions.
        center = params.get("center", (L / 2,) * grid.d_tangential + (grid.height / 3,))
        width = params.get("width", L / 8)
        r2 = np.zeros(tshape)
        for i in range(grid.d_tangential):
            dx = x[i] - center[i]
            dx = (dx + L / 2) % L - L / 2
            r2 = r2 + dx**2
        vert = np.exp(-((z - center[-1]) / width) ** 2)
        vals = _bump(r2, width)[..., None] * vert
        return GridField(grid, vals[None, ...].astype(complex))

    if spec == "div_free_bump":
        # Divergence-free velocity with zero trace at x_d = 0, built from a
        # stream function (d=2) or a vector potential (d=3).
        center = params.get("center", (L / 2,) * grid.d_tangential + (grid.height / 3,))
        width = params.get("width", L / 8)
        amp = params.get("amplitude", 1.0)
        s, ds = _vertical_profile(z, center[-1], width)
        if d == 2:
            dx = (x[0] - center[0] + L / 2) % L - L / 2
            B = amp * np.exp(-(dx / width) ** 2)
            dB = -2 * dx / width**2 * B
            # u1 = d_z psi, u2 = -d_x psi with psi = B(x) s(z)
            vals = np.empty(grid.field_shape(2), dtype=complex)
            vals[0] = B[..., None] * ds
            vals[1] = -dB[..., None] * s
            return GridField(grid, vals)
        dx1 = (x[0] - center[0] + L / 2) % L - L / 2
        dx2 = (x[1] - center[1] + L / 2) % L - L / 2
        B = amp * np.exp(-(dx1**2 + dx2**2) / width**2)
        dB1 = -2 * dx1 / width**2 * B
        # u = curl (0, phi, 0) with phi = B(x') s(z): u = (-B s', 0, B_x1 s)
        vals = np.empty(grid.field_shape(3), dtype=complex)
        vals[0] = -B[..., None] * ds
        vals[1] = 0.0
        vals[2] = dB1[..., None] * s
        return GridField(grid, vals)

    if spec == "parasitic":
        # Shear flow u = (a'(x_d), 0) with a_j = (D_j/lam)(exp(-sqrt(lam) x_d) - 1).
        lam = params["lam"]
        if isinstance(lam, SectorPoint):
            lam = lam.value
        D = np.atleast_1d(np.asarray(params["D"], dtype=complex))
        mu = cmath.sqrt(lam)
        prof = (np.exp(-mu * z) - 1.0) / lam
        vals = np.zeros(grid.field_shape(d), dtype=complex)
        for j in range(d - 1):
            vals[j] = np.broadcast_to(D[j] * prof, tshape + (len(z),))
        return GridField(grid, vals)

    raise ValueError(f"unknown analytic field spec: {spec!r}")


@dataclass
class SolverConfig:
    """Runtime configuration; mirrors the JSON config document."""

    dimension: int = 2
    box_length: float = 8.0
    n_tangential: int = 24
    height: float = 8.0
    n_cells: int = 192
    grading: float = 1.0
    lambda_modulus: float = 1.0
    lambda_argument: float = 0.0
    epsilon: float = math.pi / 8
    eta: float = 3 * math.pi / 4
    kappa: float = 0.5
    n_nodes: int = 192
    horizon: float = 0.25
    time_steps: int = 4
    q: float = 2.0
    rho: float = 1.0
    data_amplitude: float = 1.0
    quadrature_tol: float = 1e-8
    fixed_point_tol: float = 1e-8

    def __post_init__(self):
        if not (math.pi / 2 < self.eta < math.pi):
            raise ValueError("contour angle eta must lie in (pi/2, pi)")
        if self.kappa <= 0:
            raise ValueError("contour arc radius kappa must be positive")
        if self.quadrature_tol <= 0 or self.fixed_point_tol <= 0:
            raise ValueError("tolerances must be positive")

    @property
    def lam(self) -> SectorPoint:
        return SectorPoint(self.lambda_modulus, self.lambda_argument, self.epsilon)

    def grid(self) -> HalfSpaceGrid:
        return make_grid(self.dimension, self.box_length, self.n_tangential,
                         self.height, self.n_cells, self.grading)

    @classmethod
    def from_json(cls, path) -> "SolverConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(raw) - {f for f in known}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ValueError(str(exc)) from exc

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def field_to_csv(f: GridField | SpectralField, path) -> None:
    """Write one row per (component, tangential index..., node): re, im columns."""
    vals = f.values if isinstance(f, GridField) else f.modal_values
    grid = f.grid
    dt = grid.d_tangential
    with open(path, "w") as fh:
        idx_cols = ",".join(f"i{j}" for j in range(dt))
        fh.write(f"component,{idx_cols},node,re,im\n")
        it = np.ndindex(vals.shape)
        for idx in it:
            v = vals[idx]
            mid = ",".join(str(i) for i in idx[1:-1])
            fh.write(f"{idx[0]},{mid},{idx[-1]},{v.real:.17g},{v.imag:.17g}\n")
