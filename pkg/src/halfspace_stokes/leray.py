"""Half-space Helmholtz-Leray projection and the projected divergence.

``project`` removes the gradient part of a vector field by solving the
Neumann problem for the potential per tangential mode, with all vertical
integrals evaluated in closed form against a cubic-spline representation
of the data.  ``project_div`` applies the integrated-by-parts form of
``P div`` to a tensor field directly -- local terms plus exponential
multiplier integrals -- without ever forming the (unbounded) projector
on the differentiated data; the two routes agree on smooth decaying
fields and that agreement is the transcription oracle for the several
sign-sensitive terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .core import GridField, HalfSpaceGrid, SpectralField, to_physical, to_spectral
from ._vertical import (_cell_increments, poly_decay_integral, poly_two_sided,
                        spline_cells)

__all__ = ["TensorField", "project", "project_div", "tensor_divergence"]


@dataclass(frozen=True)
class TensorField:
    """d x d tensor-valued grid data with measured boundary cancellations.

    ``values[a, b]`` holds the component F_{ab}; ``boundary_flags`` records
    the measured relative traces F_{a d}(.,0), F_{d b}(.,0) and
    d_d F_{dd}(.,0) -- the cancellation conditions under which the
    integrated-by-parts form of ``P div`` is valid.  Flags are always
    computed from the data, never assumed.
    """

    grid: HalfSpaceGrid
    values: np.ndarray
    boundary_flags: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.grid.dimension
        expected = (d, d) + self.grid.field_shape(1)[1:]
        if self.values.shape != expected:
            raise ValueError(
                f"tensor values shape {self.values.shape}, expected {expected}")
        if not self.boundary_flags:
            object.__setattr__(self, "boundary_flags", self._measure_flags())

    def _measure_flags(self) -> dict:
        d = self.grid.dimension
        scale = float(np.max(np.abs(self.values))) or 1.0
        znodes = self.grid.znodes()
        sp = CubicSpline(znodes, self.values[d - 1, d - 1], axis=-1,
                         bc_type="not-a-knot")
        ddFdd = float(np.max(np.abs(sp(0.0, 1))))
        return {
            "normal_column_trace": float(
                np.max(np.abs(self.values[:, d - 1, ..., 0]))) / scale,
            "normal_row_trace": float(
                np.max(np.abs(self.values[d - 1, :, ..., 0]))) / scale,
            "dd_derivative_trace": ddFdd / scale,
        }

    def cancellation_defect(self) -> float:
        return max(self.boundary_flags.values())

    @classmethod
    def from_outer(cls, u: GridField, v: GridField) -> "TensorField":
        """The tensor u (x) v; cancellations hold when u, v vanish at 0."""
        same = u.grid is v.grid or (
            u.grid.field_shape(1) == v.grid.field_shape(1)
            and np.array_equal(u.grid.znodes(), v.grid.znodes())
            and u.grid.box_length == v.grid.box_length)
        if not same:
            raise ValueError("outer product needs a common grid")
        d = u.grid.dimension
        if u.components != d or v.components != d:
            raise ValueError(f"outer product needs {d}-component fields")
        vals = u.values[:, None] * v.values[None, :]
        return cls(u.grid, vals)


def _mode_data(grid: HalfSpaceGrid):
    ximesh = grid.wavenumber_mesh()
    xin = np.sqrt(np.sum(ximesh**2, axis=0))
    mask = xin > 0
    r = np.where(mask, xin, 1.0)
    return ximesh, xin, mask, r


def _decay_prefix(w, znodes, cells):
    """S_low(z_k) = int_0^{z_k} e^{-w s} profile(s) ds at every node."""
    _, cell_l, _ = _cell_increments(w, znodes, cells)
    terms = np.exp(-w[..., None] * znodes[:-1]) * cell_l
    zero = np.zeros(terms.shape[:-1] + (1,), dtype=complex)
    return np.concatenate([zero, np.cumsum(terms, axis=-1)], axis=-1)


def project(f: GridField) -> GridField:
    """Helmholtz-Leray projection: remove the gradient of the Neumann
    potential so the output is solenoidal with zero normal trace.

    The potential solves ``g'' - |xi|^2 g = div f`` per mode with
    ``g'(0) = f_d(.,0)`` and decay upward; the zero mode keeps the
    tangential data and drops the normal component (a pure gradient).
    """
    grid = f.grid
    d = grid.dimension
    if f.components != d:
        raise ValueError(f"projection needs {d} components")
    znodes = grid.znodes()
    ximesh, xin, mask, r = _mode_data(grid)
    fhat = to_spectral(f).modal_values

    tangdiv = np.zeros(fhat.shape[1:], dtype=complex)
    for c in range(d - 1):
        tangdiv += 1j * ximesh[c][..., None] * fhat[c]
    qcells = spline_cells(znodes, tangdiv)
    dcells = spline_cells(znodes, fhat[d - 1])
    # divergence of the spline representation: tangential part plus the
    # cellwise derivative of the normal component (one degree lower)
    for k in range(3):
        qcells[..., k] = qcells[..., k] + (k + 1) * dcells[..., k + 1]

    A_m, A_p = poly_two_sided(r, znodes, qcells)
    S = poly_decay_integral(r, znodes, qcells)
    expz = np.exp(-r[..., None] * znodes)
    fd0 = fhat[d - 1][..., 0]
    ghat = -(A_m + A_p + expz * S[..., None]) / (2.0 * r[..., None]) \
        - (fd0 / r)[..., None] * expz
    dghat = (A_m - A_p + expz * S[..., None]) / 2.0 + fd0[..., None] * expz

    out = np.empty_like(fhat)
    m = mask[..., None]
    for c in range(d - 1):
        out[c] = fhat[c] - np.where(m, 1j * ximesh[c][..., None] * ghat, 0.0)
    out[d - 1] = np.where(m, fhat[d - 1] - dghat, 0.0)
    return to_physical(SpectralField(grid, out))


def project_div(F: TensorField, tol: float = 1e-6) -> GridField:
    """``P div F`` by the integrated-by-parts multiplier formulas.

    Requires the boundary cancellations F_{a d} = F_{d b} = d_d F_{dd} = 0
    at the boundary within ``tol`` (relative); the output is solenoidal
    with zero normal trace and agrees with ``project(tensor_divergence(F))``
    on smooth decaying tensors.
    """
    defect = F.cancellation_defect()
    if defect > tol:
        raise ValueError(
            "boundary cancellation defect "
            f"{defect:.3e} exceeds tolerance {tol:.1e}: {F.boundary_flags}")
    grid = F.grid
    d = grid.dimension
    znodes = grid.znodes()
    ximesh, xin, mask, r = _mode_data(grid)
    Fhat = np.empty_like(F.values)
    for a in range(d):
        Fhat[a] = to_spectral(GridField(grid, F.values[a])).modal_values

    # contracted profiles entering the multiplier integrals
    TT = np.zeros(Fhat.shape[2:], dtype=complex)
    for a in range(d - 1):
        for g in range(d - 1):
            TT += (ximesh[a] * ximesh[g])[..., None] * Fhat[a, g]
    Fdd = Fhat[d - 1, d - 1]
    Vsum = np.zeros_like(TT)
    for g in range(d - 1):
        Vsum += 1j * ximesh[g][..., None] * (Fhat[d - 1, g] + Fhat[g, d - 1])

    cTT = spline_cells(znodes, TT)
    cdd = spline_cells(znodes, Fdd)
    cV = spline_cells(znodes, Vsum)
    G1 = TT - (xin**2)[..., None] * Fdd
    cG1 = spline_cells(znodes, G1)

    expz = np.exp(-r[..., None] * znodes)
    AmTT, ApTT = poly_two_sided(r, znodes, cTT)
    Amdd, Apdd = poly_two_sided(r, znodes, cdd)
    AmV, ApV = poly_two_sided(r, znodes, cV)
    AmG1, ApG1 = poly_two_sided(r, znodes, cG1)
    STT = poly_decay_integral(r, znodes, cTT)[..., None]
    Sdd = poly_decay_integral(r, znodes, cdd)[..., None]
    SV = poly_decay_integral(r, znodes, cV)[..., None]
    SlowG1 = _decay_prefix(r, znodes, cG1)
    ShighG1 = poly_decay_integral(r, znodes, cG1)[..., None] - SlowG1
    SlowV = _decay_prefix(r, znodes, cV)
    ShighV = SV - SlowV

    m = mask[..., None]
    rr = r[..., None]
    out = np.empty((d,) + TT.shape, dtype=complex)
    for b in range(d - 1):
        loc = np.zeros_like(TT)
        for a in range(d - 1):
            loc += 1j * ximesh[a][..., None] * Fhat[a, b]
        sp = CubicSpline(znodes, Fhat[d - 1, b], axis=-1, bc_type="not-a-knot")
        loc += sp(znodes, 1)
        loc += -1j * ximesh[b][..., None] * Fdd
        ixb = 1j * ximesh[b][..., None]
        corr = (-ixb / (2.0 * rr)) * (AmTT + ApTT + expz * STT) \
            + (ixb * rr / 2.0) * (Amdd + Apdd + expz * Sdd) \
            + (ixb / 2.0) * (-AmV + ApV + expz * SV)
        out[b] = loc + np.where(m, corr, 0.0)
    locd = np.zeros_like(TT)
    for g in range(d - 1):
        locd += -1j * ximesh[g][..., None] * Fhat[d - 1, g]
    corrd = 0.5 * (AmG1 + expz * SlowG1) \
        - 0.5 * (ApG1 - expz * ShighG1) \
        + (rr / 2.0) * (AmV - expz * SlowV) \
        + (rr / 2.0) * (ApV - expz * ShighV)
    out[d - 1] = np.where(m, locd + corrd, 0.0)
    return to_physical(SpectralField(grid, out))


def tensor_divergence(F: TensorField) -> GridField:
    """``(div F)_b = d_a F_{ab}``: spectral tangential derivatives and
    spline vertical derivatives; the composition oracle for project_div."""
    grid = F.grid
    d = grid.dimension
    znodes = grid.znodes()
    ximesh = grid.wavenumber_mesh()
    out = np.zeros((d,) + F.values.shape[2:], dtype=complex)
    for b in range(d):
        acc = np.zeros_like(out[b])
        for a in range(d - 1):
            fh = to_spectral(GridField(grid, F.values[a, b][None])).modal_values[0]
            dm = 1j * ximesh[a][..., None] * fh
            acc += to_physical(SpectralField(grid, dm[None])).values[0]
        sp = CubicSpline(znodes, F.values[d - 1, b], axis=-1,
                         bc_type="not-a-knot")
        acc += sp(znodes, 1)
        out[b] = acc
    return GridField(grid, out)
