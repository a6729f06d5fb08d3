"""Closed-form vertical integrals against piecewise-linear profiles.

All resolvent-type operators reduce, per tangential mode, to integrals
of the form ``int exp(-w*(...)) * f(z) dz`` with ``Re w >= 0`` and ``f``
continuous piecewise linear on the vertical cells.  Each cell integral
has an exact exponential-times-linear primitive; sums across cells use
stable prefix recursions (only decaying exponential factors appear, so
nothing overflows).

Shapes: ``w`` is an arbitrary broadcastable array of complex decay
rates (one per tangential mode), profiles carry a trailing vertical
axis of length ``len(znodes)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

__all__ = [
    "exp_moments",
    "exp_moments3",
    "exp_moments4",
    "linear_cells",
    "spline_cells",
    "integral_cells",
    "poly_decay_integral",
    "poly_two_sided",
    "decay_integral",
    "two_sided_split",
    "reflected_integral",
    "gauss_cell_integral",
]

_SERIES_CUT = 1e-3


def exp_moments(w: np.ndarray, h):
    """E0 = int_0^h e^{-w s} ds and E1 = int_0^h s e^{-w s} ds.

    Stable for any complex w with Re w >= 0, including w = 0, via a
    short Taylor series when |w h| is tiny.  ``h`` may be an array
    broadcastable against ``w`` (e.g. per-cell widths).
    """
    w = np.asarray(w, dtype=complex)
    h = np.asarray(h, dtype=float)
    x = w * h
    small = np.abs(x) < _SERIES_CUT
    xs = np.where(small, x, 0.0)
    # series in x = w h: E0 = h (1 - x/2 + x^2/6 - x^3/24), E1 = h^2 (1/2 - x/3 + x^2/8 - x^3/30)
    e0_s = h * (1 - xs / 2 + xs**2 / 6 - xs**3 / 24)
    e1_s = h**2 * (0.5 - xs / 3 + xs**2 / 8 - xs**3 / 30)
    wn = np.where(small, 1.0, w)
    em = np.exp(-np.where(small, 0.0, x))
    e0_d = -np.expm1(-np.where(small, 0.0, x)) / wn
    e1_d = (e0_d - h * em) / wn
    return np.where(small, e0_s, e0_d), np.where(small, e1_s, e1_d)


def exp_moments3(w: np.ndarray, h):
    """E0, E1 and E2 = int_0^h s^2 e^{-w s} ds, series-stabilized."""
    w = np.asarray(w, dtype=complex)
    h = np.asarray(h, dtype=float)
    e0, e1 = exp_moments(w, h)
    x = w * h
    small = np.abs(x) < _SERIES_CUT
    xs = np.where(small, x, 0.0)
    e2_s = h**3 * (1.0 / 3 - xs / 4 + xs**2 / 10 - xs**3 / 36)
    wn = np.where(small, 1.0, w)
    em = np.exp(-np.where(small, 0.0, x))
    e2_d = (2.0 * e1 - h**2 * em) / wn
    return e0, e1, np.where(small, e2_s, e2_d)


def exp_moments4(w: np.ndarray, h):
    """E0..E3 with E3 = int_0^h s^3 e^{-w s} ds, series-stabilized."""
    w = np.asarray(w, dtype=complex)
    h = np.asarray(h, dtype=float)
    e0, e1, e2 = exp_moments3(w, h)
    x = w * h
    small = np.abs(x) < _SERIES_CUT
    xs = np.where(small, x, 0.0)
    e3_s = h**4 * (0.25 - xs / 5 + xs**2 / 12 - xs**3 / 42)
    wn = np.where(small, 1.0, w)
    em = np.exp(-np.where(small, 0.0, x))
    e3_d = (3.0 * e2 - h**3 * em) / wn
    return e0, e1, e2, np.where(small, e3_s, e3_d)


def spline_cells(znodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cell coefficients (c0..c3) of the not-a-knot cubic spline of f.

    Same layout as :func:`linear_cells` but fourth-order accurate; the
    exponential convolutions accept these cells unchanged.
    """
    from scipy.interpolate import CubicSpline
    znodes = np.asarray(znodes, dtype=float)
    sp = CubicSpline(znodes, f, axis=-1, bc_type="not-a-knot")
    c = sp.c[::-1]                     # degree-ascending, shape (4, nc, ...)
    return np.moveaxis(c, (0, 1), (-1, -2))


def linear_cells(znodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cell coefficients (c0, c1) of the piecewise-linear interpolant.

    On cell j the profile is c0 + c1*s with s = z - znodes[j].  ``f`` has
    shape (..., nz); result has shape (..., nz-1, 2).
    """
    znodes = np.asarray(znodes, dtype=float)
    h = np.diff(znodes)
    c0 = f[..., :-1]
    c1 = (f[..., 1:] - f[..., :-1]) / h
    return np.stack([c0, c1], axis=-1)


def integral_cells(znodes: np.ndarray, cells: np.ndarray, start=0.0):
    """Antiderivative of a cell-polynomial profile, one degree higher.

    Returns (coefs, node_values): G(z) = start + int_0^z profile, with
    G exact on every cell.  Input cells have shape (..., nc, K);
    output coefs (..., nc, K+1) and node values (..., nc+1).
    """
    znodes = np.asarray(znodes, dtype=float)
    h = np.diff(znodes)
    K = cells.shape[-1]
    nc = cells.shape[-2]
    base = cells.shape[:-2]
    coefs = np.zeros(base + (nc, K + 1), dtype=complex)
    for k in range(K):
        coefs[..., k + 1] = cells[..., k] / (k + 1)
    # cell increments and running node values
    inc = np.zeros(base + (nc,), dtype=complex)
    for k in range(1, K + 1):
        inc = inc + coefs[..., k] * h**k
    nodes = np.concatenate(
        [np.zeros(base + (1,), dtype=complex), np.cumsum(inc, axis=-1)], axis=-1)
    nodes = nodes + start
    coefs[..., 0] = nodes[..., :-1]
    return coefs, nodes


def _cell_moments(w, h, K):
    """E_k = int_0^h s^k e^{-w s} ds for k < K."""
    if K <= 2:
        return exp_moments(w, h)
    if K == 3:
        return exp_moments3(w, h)
    return exp_moments4(w, h)


def _cell_increments(w, znodes, cells):
    """Vectorized per-cell quantities for the convolution recursions.

    Returns (dec, cell_l, cell_r): the cell decay factor e^{-w h_j} and
    the cell integrals weighted from the left end (e^{-w(z - z_j)}) and
    the right end (e^{-w(z_{j+1} - z)}), shapes (..., nc).
    """
    h = np.diff(np.asarray(znodes, dtype=float))
    wb = np.asarray(w, dtype=complex)[..., None]
    K = cells.shape[-1]
    mom = _cell_moments(wb, h, K)
    binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]
    cell_l = sum(cells[..., k] * mom[k] for k in range(K))
    # substituting u = h - s gives M_k = sum_m C(k,m) h^{k-m} (-1)^m E_m
    cell_r = 0.0
    for k in range(K):
        Mk = sum(binom[k][m] * h ** (k - m) * (-1) ** m * mom[m]
                 for m in range(k + 1))
        cell_r = cell_r + cells[..., k] * Mk
    return np.exp(-wb * h), cell_l, cell_r


def poly_decay_integral(w: np.ndarray, znodes: np.ndarray,
                        cells: np.ndarray) -> np.ndarray:
    """S = int_0^H e^{-w z} profile(z) dz for a cell-polynomial profile."""
    znodes = np.asarray(znodes, dtype=float)
    w = np.asarray(w, dtype=complex)
    _, cell_l, _ = _cell_increments(w, znodes, cells)
    return np.sum(np.exp(-w[..., None] * znodes[:-1]) * cell_l, axis=-1)


def poly_two_sided(w: np.ndarray, znodes: np.ndarray, cells: np.ndarray):
    """(A_minus, A_plus) node values for a cell-polynomial profile.

    Same contract as :func:`two_sided_split` but the profile is given by
    cell coefficients of shape (..., nc, K).
    """
    znodes = np.asarray(znodes, dtype=float)
    w = np.asarray(w, dtype=complex)
    nz = len(znodes)
    dec, cell_l, cell_r = _cell_increments(w, znodes, cells)
    base = np.broadcast_shapes(w.shape, cells.shape[:-2])
    A_minus = np.zeros(base + (nz,), dtype=complex)
    A_plus = np.zeros(base + (nz,), dtype=complex)
    for j in range(nz - 1):
        A_minus[..., j + 1] = dec[..., j] * A_minus[..., j] + cell_r[..., j]
    for j in range(nz - 2, -1, -1):
        A_plus[..., j] = dec[..., j] * A_plus[..., j + 1] + cell_l[..., j]
    return A_minus, A_plus


def decay_integral(w: np.ndarray, znodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """S = int_0^H e^{-w z} f(z) dz for piecewise-linear f on znodes.

    ``f`` has shape (..., nz) broadcastable against ``w`` of shape (...).
    Returns shape (...).
    """
    znodes = np.asarray(znodes, dtype=float)
    w = np.asarray(w, dtype=complex)
    S = np.zeros(np.broadcast_shapes(w.shape, f.shape[:-1]), dtype=complex)
    for j in range(len(znodes) - 1):
        h = znodes[j + 1] - znodes[j]
        e0, e1 = exp_moments(w, h)
        df = f[..., j + 1] - f[..., j]
        cell = f[..., j] * e0 + (df / h) * e1
        S = S + np.exp(-w * znodes[j]) * cell
    return S


def two_sided_split(w: np.ndarray, znodes: np.ndarray, f: np.ndarray):
    """Lower/upper halves of the two-sided exponential convolution.

    Returns (A_minus, A_plus) at every node y = znodes[k]:
        A_minus(y) = int_0^y e^{-w (y-z)} f(z) dz
        A_plus(y)  = int_y^H e^{-w (z-y)} f(z) dz
    so that A_minus + A_plus = int_0^H e^{-w |y-z|} f(z) dz.
    Both recursions only multiply by decaying exponentials (stable).
    """
    znodes = np.asarray(znodes, dtype=float)
    w = np.asarray(w, dtype=complex)
    nz = len(znodes)
    base = np.broadcast_shapes(w.shape, f.shape[:-1])
    A_minus = np.zeros(base + (nz,), dtype=complex)
    A_plus = np.zeros(base + (nz,), dtype=complex)
    for j in range(nz - 1):
        h = znodes[j + 1] - znodes[j]
        e0, e1 = exp_moments(w, h)
        dec = np.exp(-w * h)
        df = f[..., j + 1] - f[..., j]
        # cell measured from its right end: weight e^{-w (z_{j+1} - z)}
        cell_r = f[..., j + 1] * e0 - (df / h) * e1
        A_minus[..., j + 1] = dec * A_minus[..., j] + cell_r
    for j in range(nz - 2, -1, -1):
        h = znodes[j + 1] - znodes[j]
        e0, e1 = exp_moments(w, h)
        dec = np.exp(-w * h)
        df = f[..., j + 1] - f[..., j]
        # cell measured from its left end: weight e^{-w (z - z_j)}
        cell_l = f[..., j] * e0 + (df / h) * e1
        A_plus[..., j] = dec * A_plus[..., j + 1] + cell_l
    return A_minus, A_plus


def reflected_integral(w: np.ndarray, znodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """int_0^H e^{-w (y+z)} f(z) dz at every node y; shape (..., nz)."""
    S = decay_integral(w, znodes, f)
    y = np.asarray(znodes, dtype=float)
    return S[..., None] * np.exp(-np.asarray(w, dtype=complex)[..., None] * y)


def gauss_cell_integral(t: float, y: np.ndarray, znodes: np.ndarray,
                        f: np.ndarray, sign: int = 1) -> np.ndarray:
    """int_0^H Phi_t(y - sign*z) f(z) dz with the 1-D heat kernel Phi_t.

    Phi_t(s) = exp(-s^2/(4t)) / sqrt(4 pi t).  Exact for piecewise-linear
    f via erf/Gaussian antiderivatives.  ``y`` has shape (m,), ``f`` shape
    (..., nz); result shape (..., m).
    """
    znodes = np.asarray(znodes, dtype=float)
    y = np.asarray(y, dtype=float)
    rt = np.sqrt(4.0 * t)
    # with u = sign*z the kernel is Phi_t(y-u); linear coefficients in z map to u
    out = np.zeros(f.shape[:-1] + y.shape, dtype=complex)
    for j in range(len(znodes) - 1):
        a, b = znodes[j], znodes[j + 1]
        h = b - a
        c1 = (f[..., j + 1] - f[..., j]) / h          # slope in z
        c0 = f[..., j] - c1 * a                        # f(z) = c0 + c1 z
        ua, ub = sign * a, sign * b
        if sign < 0:
            ua, ub = ub, ua
        # G0 = int_{ua}^{ub} Phi_t(y-u) du ; G1 = int (u-y) Phi_t(y-u) du
        za = (ua - y) / rt
        zb = (ub - y) / rt
        G0 = 0.5 * (erf(zb) - erf(za))
        phia = np.exp(-za**2) / (rt * np.sqrt(np.pi))
        phib = np.exp(-zb**2) / (rt * np.sqrt(np.pi))
        G1 = 2.0 * t * (phia - phib)
        # f as a function of u: z = sign*u, so c0 + c1*sign*u = (c0 + c1*sign*y) + c1*sign*(u-y)
        out = out + (c0[..., None] + sign * c1[..., None] * y) * G0 \
                  + sign * c1[..., None] * G1
    return out
