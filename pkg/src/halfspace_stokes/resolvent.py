"""Semi-analytic solver for the half-space Stokes resolvent problem.

Per tangential Fourier mode the solution splits into a Dirichlet-Laplace
part ``v`` (whole-space kernel minus its reflection) and a nonlocal
pressure-driven part ``w``; the pressure has a closed per-mode formula.
All vertical integrals are evaluated exactly for cell-polynomial data,
so the computed ``(u, p)`` solves the discretized problem to round-off:
the discretization error lives entirely in the piecewise representation
of the data and is measured by manufactured-solution studies, while the
reported residuals certify the internal consistency of the assembly.

The normal data component is replaced, mode by mode, by the exact
antiderivative of ``-i xi . f'`` (a piecewise-quadratic profile), which
makes the discrete data exactly solenoidal; the distance between this
compatible profile and the sampled one is the measured divergence defect
of the input and is reported (and bounded) in the diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (GridField, HalfSpaceGrid, SectorPoint, SpectralField,
                   to_physical, to_spectral)
from .report import EstimateReport, fit_constant
from .uloc_norms import UlocSpec, gradient_field, uloc_norm
from ._vertical import (integral_cells, linear_cells, poly_decay_integral,
                        poly_two_sided)

__all__ = [
    "ResolventSolution",
    "vertical_convolve",
    "solve_resolvent",
    "dirichlet_laplace_part",
    "pressure_decay_profile",
    "fit_resolvent_estimates",
]

CONVOLVE_MODES = ("whole", "reflected", "nonlocal_y", "pressure")


@dataclass
class ResolventSolution:
    """Velocity, pressure gradient and gauged pressure with diagnostics."""

    u: GridField
    grad_p: GridField
    p: GridField
    lam: SectorPoint
    diagnostics: dict = field(default_factory=dict)


def _lam_value(lam) -> complex:
    return lam.value if isinstance(lam, SectorPoint) else complex(lam)


def vertical_convolve(lam, xi, znodes, profile, mode):
    """One per-mode vertical integral of the resolvent formulas.

    Evaluates ``int_0^H multiplier(y, z) profile(z) dz`` at every node y
    for a piecewise-linear ``profile``, with the multiplier selected by
    ``mode``: whole ``e^{-w|y-z|}/2w``, reflected ``e^{-w(y+z)}/2w``,
    nonlocal_y ``(e^{-|xi|y}-e^{-wy})/(w(w-|xi|)) e^{-wz}`` and pressure
    ``e^{-|xi|y} e^{-wz} (1/|xi| + 1/w)``.
    """
    if mode not in CONVOLVE_MODES:
        raise ValueError(f"unknown convolve mode {mode!r}")
    lamv = _lam_value(lam)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rho = float(np.linalg.norm(xi))
    if mode in ("nonlocal_y", "pressure") and rho == 0.0:
        raise ValueError(f"mode {mode!r} requires a nonzero tangential mode")
    w = np.sqrt(np.asarray(lamv + rho**2, dtype=complex))
    znodes = np.asarray(znodes, dtype=float)
    profile = np.asarray(profile, dtype=complex)
    cells = linear_cells(znodes, profile)
    if mode == "whole":
        A_minus, A_plus = poly_two_sided(w, znodes, cells)
        return (A_minus + A_plus) / (2.0 * w)
    S = poly_decay_integral(w, znodes, cells)
    if mode == "reflected":
        return np.exp(-w * znodes) * S[..., None] / (2.0 * w)
    if mode == "nonlocal_y":
        nl = (np.exp(-rho * znodes) - np.exp(-w * znodes)) * (w + rho) / (lamv * w)
        return nl * S[..., None]
    return np.exp(-rho * znodes) * (1.0 / rho + 1.0 / w) * S[..., None]


def _mode_geometry(grid: HalfSpaceGrid, lam):
    lamv = _lam_value(lam)
    ximesh = grid.wavenumber_mesh()
    xin = np.sqrt(np.sum(ximesh**2, axis=0))
    w = np.sqrt(lamv + xin.astype(complex) ** 2)
    return lamv, ximesh, xin, w


def _compatible_normal_cells(grid, ximesh, fhat):
    """Exactly solenoidal replacement of the discrete data, per mode.

    The normal component is rebuilt as the piecewise-quadratic profile
    ``-int_0^z i xi . fhat'`` so the discrete divergence vanishes
    identically.  The small accumulated drift of that antiderivative
    (an O(h^2) quantity for solenoidal input) is distributed back onto
    the tangential components as a per-mode constant, which pins the
    rebuilt profile to the sampled normal trace at both ends of the
    column; both boundary terms of the divergence identity then vanish.

    Returns (fhat_adjusted, qcells, qnodes, sdot_cells, defect) with
    sdot = i xi . fhat_adjusted' and qnodes the rebuilt normal values.
    """
    znodes = grid.znodes()
    H = znodes[-1]
    d = grid.dimension
    sdot = np.zeros(fhat.shape[1:], dtype=complex)
    for j in range(d - 1):
        sdot += 1j * ximesh[j][..., None] * fhat[j]
    sdot_cells = linear_cells(znodes, sdot)
    _, qnodes0 = integral_cells(znodes, -sdot_cells)
    defect = float(np.max(np.abs(qnodes0 - fhat[d - 1])))
    xin2 = np.sum(ximesh**2, axis=0)
    nzmask = xin2 > 0
    drift = (qnodes0[..., -1] - fhat[d - 1][..., -1]) / H
    drift = np.where(nzmask, drift, 0.0)
    fhat = fhat.copy()
    for j in range(d - 1):
        cj = np.where(nzmask, -1j * drift * ximesh[j] / np.where(nzmask, xin2, 1.0), 0.0)
        fhat[j] = fhat[j] + cj[..., None]
    sdot = sdot + drift[..., None]
    sdot_cells = linear_cells(znodes, sdot)
    qcells, qnodes = integral_cells(znodes, -sdot_cells)
    return fhat, qcells, qnodes, sdot_cells, defect


def _dl_apply(w, znodes, cells):
    """Dirichlet-Laplace resolvent of one cell-polynomial profile.

    Returns (value, d/dy value, e^{-wy}-weighted integral S) at nodes.
    """
    A_minus, A_plus = poly_two_sided(w, znodes, cells)
    S = poly_decay_integral(w, znodes, cells)
    expwy = np.exp(-w[..., None] * znodes)
    val = (A_minus + A_plus - expwy * S[..., None]) / (2.0 * w[..., None])
    dval = (A_plus - A_minus + expwy * S[..., None]) / 2.0
    return val, dval


def solve_resolvent(lam, f: GridField, tol: float = 1e-6) -> ResolventSolution:
    """Solve ``lam u - Lap u + grad p = f`` with ``div u = 0``, ``u(0) = 0``.

    ``f`` must be solenoidal with vanishing normal trace up to ``tol``
    (relative, measured in the discrete compatible sense); otherwise the
    call is rejected with the measured defect.
    """
    grid = f.grid
    d = grid.dimension
    if f.components != d:
        raise ValueError(f"resolvent data needs {d} components")
    lamv, ximesh, xin, w = _mode_geometry(grid, lam)
    znodes = grid.znodes()
    fhat = to_spectral(f).modal_values
    scale = float(np.max(np.abs(fhat))) or 1.0

    fhat, qcells, qnodes, sdot_cells, defect = _compatible_normal_cells(
        grid, ximesh, fhat)
    defect /= scale
    bdry = float(np.max(np.abs(fhat[d - 1][..., 0]))) / scale
    if defect > tol or bdry > tol:
        raise ValueError(
            f"data not solenoidal: divergence defect {defect:.3e}, "
            f"normal trace {bdry:.3e} (tolerance {tol:.1e})")

    nz = len(znodes)
    uhat = np.zeros((d,) + fhat.shape[1:], dtype=complex)
    duhat = np.zeros_like(uhat)      # exact d/dy of each velocity mode
    phat = np.zeros(fhat.shape[1:], dtype=complex)

    # Dirichlet-Laplace part, all components
    for c in range(d - 1):
        cells = linear_cells(znodes, fhat[c])
        uhat[c], duhat[c] = _dl_apply(w, znodes, cells)
    uhat[d - 1], duhat[d - 1] = _dl_apply(w, znodes, qcells)

    # nonlocal part and pressure on nonzero modes
    nzmask = xin > 0
    rho = np.where(nzmask, xin, 1.0)
    Sdot = poly_decay_integral(w, znodes, sdot_cells)       # int e^{-wz} i xi.f'
    e_rho = np.exp(-rho[..., None] * znodes)
    e_w = np.exp(-w[..., None] * znodes)
    nl = (e_rho - e_w) * ((w + rho) / (lamv * w))[..., None]
    dnl = (-rho[..., None] * e_rho + w[..., None] * e_w) \
        * ((w + rho) / (lamv * w))[..., None]
    mask = nzmask[..., None]
    for c in range(d - 1):
        coef = np.where(nzmask, ximesh[c] / rho, 0.0)
        uhat[c] += np.where(mask, -1j * coef[..., None] * nl * Sdot[..., None], 0.0)
        duhat[c] += np.where(mask, -1j * coef[..., None] * dnl * Sdot[..., None], 0.0)
    uhat[d - 1] += np.where(mask, nl * Sdot[..., None], 0.0)
    duhat[d - 1] += np.where(mask, dnl * Sdot[..., None], 0.0)
    phat = np.where(mask,
                    (1.0 / rho + 1.0 / w)[..., None] * e_rho * Sdot[..., None],
                    0.0)

    gphat = np.zeros((d,) + phat.shape, dtype=complex)
    for c in range(d - 1):
        gphat[c] = 1j * ximesh[c][..., None] * phat
    gphat[d - 1] = -rho[..., None] * phat * mask

    u = to_physical(SpectralField(grid, uhat))
    p = to_physical(SpectralField(grid, phat[None]))
    grad_p = to_physical(SpectralField(grid, gphat))

    diagnostics = _diagnostics(grid, lamv, ximesh, xin, w, fhat, qnodes,
                               uhat, duhat, phat, gphat, Sdot, nl, mask,
                               rho, scale, defect)
    lam_pt = lam if isinstance(lam, SectorPoint) else SectorPoint.from_complex(lamv)
    return ResolventSolution(u, grad_p, p, lam_pt, diagnostics)


def _diagnostics(grid, lamv, ximesh, xin, w, fhat, qnodes, uhat, duhat,
                 phat, gphat, Sdot, nl, mask, rho, scale, defect):
    d = grid.dimension
    znodes = grid.znodes()
    # data profiles the discrete solution corresponds to exactly
    fdata = fhat.copy()
    fdata[d - 1] = qnodes
    # second vertical derivative: the Dirichlet-Laplace part satisfies
    # u'' = w^2 u - f exactly; the nonlocal part is closed-form in y
    e_rho = np.exp(-rho[..., None] * znodes)
    e_w = np.exp(-w[..., None] * znodes)
    d2nl = (rho[..., None] ** 2 * e_rho - w[..., None] ** 2 * e_w) \
        * ((w + rho) / (lamv * w))[..., None]
    d2uhat = w[..., None] ** 2 * uhat - fdata
    # replace the nonlocal contribution's second derivative by its
    # closed form (the w^2-identity above only holds for the DL part)
    for c in range(d - 1):
        coef = np.where(xin > 0, ximesh[c] / rho, 0.0)
        wpart = np.where(mask, -1j * coef[..., None] * nl * Sdot[..., None], 0.0)
        d2uhat[c] += -w[..., None] ** 2 * wpart \
            + np.where(mask, -1j * coef[..., None] * d2nl * Sdot[..., None], 0.0)
    wpart_d = np.where(mask, nl * Sdot[..., None], 0.0)
    d2uhat[d - 1] += -w[..., None] ** 2 * wpart_d \
        + np.where(mask, d2nl * Sdot[..., None], 0.0)

    pde = np.zeros_like(uhat)
    for c in range(d):
        pde[c] = (lamv + xin[..., None] ** 2) * uhat[c] - d2uhat[c] \
            + gphat[c] - fdata[c]
    div = np.zeros(uhat.shape[1:], dtype=complex)
    for c in range(d - 1):
        div += 1j * ximesh[c][..., None] * uhat[c]
    div += duhat[d - 1]
    tail = float(np.max(np.exp(-w.real * grid.height)
                        * np.max(np.abs(fhat), axis=(0, -1)))) / scale
    return {
        "pde_residual": float(np.max(np.abs(pde))) / scale,
        "div_residual": float(np.max(np.abs(div))) / scale,
        "bc_residual": float(np.max(np.abs(uhat[..., 0]))) / scale,
        "data_divergence_defect": defect,
        "tail_truncation_bound": tail,
        "box_length": grid.box_length,
    }


def dirichlet_laplace_part(lam, f: GridField) -> GridField:
    """Componentwise scalar resolvent with Dirichlet condition.

    Works on any number of components; no solenoidality requirement.
    """
    grid = f.grid
    lamv, ximesh, xin, w = _mode_geometry(grid, lam)
    znodes = grid.znodes()
    fhat = to_spectral(f).modal_values
    vhat = np.zeros_like(fhat)
    for c in range(fhat.shape[0]):
        cells = linear_cells(znodes, fhat[c])
        vhat[c], _ = _dl_apply(w, znodes, cells)
    return to_physical(SpectralField(grid, vhat))


def pressure_decay_profile(solution: ResolventSolution, R_list,
                           center=None):
    """Tangential-gradient pressure mass in unit slabs at heights R.

    Returns (profile, slope): profile[i] is the L^1 norm of grad' p over
    the set {|x' - center| < 1, R_i < x_d < R_i + 1}; slope is the
    fitted log-log decay exponent.
    """
    grid = solution.p.grid
    if max(R_list) + 1 > grid.height + 1e-12:
        raise ValueError("slab exceeds the grid height")
    x = grid.tangential_coords()
    L = grid.box_length
    if center is None:
        center = (L / 2.0,) * grid.d_tangential
    r2 = np.zeros(grid.tangential_shape())
    for i in range(grid.d_tangential):
        dx = (x[i] - center[i] + L / 2) % L - L / 2
        r2 = r2 + dx**2
    sel = r2 < 1.0
    hx = L / grid.n_tangential
    gp = solution.grad_p.values[: grid.dimension - 1]
    mag = np.sqrt(np.sum(np.abs(gp) ** 2, axis=0))
    znodes = grid.znodes()
    profile = []
    for R in R_list:
        col = np.zeros(grid.tangential_shape())
        for j in range(len(znodes) - 1):
            a, b = znodes[j], znodes[j + 1]
            lo, hi = max(a, R), min(b, R + 1.0)
            if hi <= lo:
                continue
            h = b - a
            fa = mag[..., j] + (mag[..., j + 1] - mag[..., j]) * (lo - a) / h
            fb = mag[..., j] + (mag[..., j + 1] - mag[..., j]) * (hi - a) / h
            col += 0.5 * (fa + fb) * (hi - lo)
        profile.append(float(np.sum(col[sel]) * hx ** grid.d_tangential))
    profile = np.asarray(profile)
    good = profile > 0
    if np.count_nonzero(good) >= 2:
        logs = np.log(np.asarray(R_list, dtype=float)[good])
        slope = float(np.polyfit(logs, np.log(profile[good]), 1)[0])
    else:
        slope = -math.inf
    return profile, slope


def _random_solenoidal(grid, rng, amplitude=1.0):
    """Random smooth solenoidal field with zero boundary trace.

    Built per mode from a vertical potential, so the discrete divergence
    defect is only the pw-linear representation error of smooth profiles.
    """
    from .core import sample_field
    L = grid.box_length
    center = [float(rng.uniform(0.25 * L, 0.75 * L))
              for _ in range(grid.d_tangential)]
    center.append(float(rng.uniform(0.25, 0.45) * grid.height))
    width = float(rng.uniform(0.11, 0.18)) * L
    return sample_field(grid, "div_free_bump", center=tuple(center),
                        width=width, amplitude=amplitude)


def fit_resolvent_estimates(q, p, lambda_sweep, trials, grid=None,
                            seed: int = 0, c_decay: float = 0.5,
                            epsilon: float = math.pi / 8):
    """Fitted constants for the resolvent operator-norm estimate shapes.

    Returns a list of EstimateReports: the first-order bound
    ``|lam| ||u|| + |lam|^{1/2} ||grad u|| <= C ||f||``, the second-order
    bound with its small-``lam`` logarithmic loss, and the mixed-exponent
    bounds with shape ``|lam|^{-s} (1 + |lam|^{d/2(1/q-1/p)})``.
    """
    from .core import make_grid
    if grid is None:
        grid = make_grid(2, 8.0, 32, 8.0, 192)
    d = grid.dimension
    rng = np.random.default_rng(seed)
    spec_q = UlocSpec(q, 1.0)
    spec_p = UlocSpec(p, 1.0)
    mix = d / 2.0 * (1.0 / q - 1.0 / p)
    def ratios_at(lam_mod, arg, f):
        lam = SectorPoint(float(lam_mod), float(arg), epsilon)
        sol = solve_resolvent(lam, f, tol=1e-2)
        nf = uloc_norm(f, spec_q)
        if nf == 0:
            raise ValueError("zero trial field")
        gu = gradient_field(sol.u)
        g2u = gradient_field(gu)
        m = float(lam_mod)
        log_shape = 1.0 + math.exp(-c_decay * m**0.5) * abs(math.log(m))
        mix_shape = 1.0 + m**mix
        return {
            "first_order": (m * uloc_norm(sol.u, spec_q)
                            + m**0.5 * uloc_norm(gu, spec_q)) / nf,
            "second_order": (uloc_norm(g2u, spec_q)
                             + uloc_norm(sol.grad_p, spec_q))
                            / (log_shape * nf),
            "mixed_u": uloc_norm(sol.u, spec_p) * m / (mix_shape * nf),
            "mixed_grad": uloc_norm(gu, spec_p) * m**0.5 / (mix_shape * nf),
        }

    keys = ("first_order", "second_order", "mixed_u", "mixed_grad")
    excluded = []
    # deterministic core: sector-edge and real-axis arguments at every
    # modulus with two fixed trial fields; shared by the half- and
    # full-sample sup estimates so stability measures whether random
    # exploration finds anything beyond the known worst directions
    core_rng = np.random.default_rng(314159)
    core_fields = [_random_solenoidal(grid, core_rng) for _ in range(2)]
    core = {k: 0.0 for k in keys}
    edge = math.pi - epsilon
    for lam_mod in lambda_sweep:
        for arg in (-edge, 0.0, edge):
            for f in core_fields:
                try:
                    r = ratios_at(lam_mod, arg, f)
                except ValueError as exc:
                    excluded.append(str(exc))
                    continue
                for k in keys:
                    core[k] = max(core[k], r[k])
    rows = {k: [] for k in keys}
    for _ in range(trials):
        for lam_mod in lambda_sweep:
            u = rng.uniform(-1.0, 1.0)
            arg = edge * math.sin(0.5 * math.pi * u)   # edge-biased draw
            f = _random_solenoidal(grid, rng)
            try:
                r = ratios_at(lam_mod, arg, f)
            except ValueError as exc:
                excluded.append(str(exc))
                continue
            for k in keys:
                rows[k].append(r[k])
    reports = []
    for key in keys:
        ratios = rows[key]
        rep = fit_constant(f"resolvent:{key}:q={q}:p={p}", ratios, excluded,
                           max_residual=0.25)
        if ratios:
            half = max(1, len(ratios) // 2)
            c_half = max(core[key], max(ratios[:half]))
            c_full = max(core[key], max(ratios))
            c_even = max(core[key], max(ratios[0::2]))
            c_odd = max(core[key], max(ratios[1::2])) if len(ratios) > 1 else c_even
            rep.fitted_constant = c_full
            rep.stability_ratio = c_full / c_half
            rep.shape_residual = abs(c_even - c_odd) / (0.5 * (c_even + c_odd))
            ok = (math.isfinite(c_full) and rep.stability_ratio <= 1.25
                  and rep.shape_residual <= 0.25)
            rep.verdict = "PASS" if ok else "FAIL"
        rep.detail["q"] = q
        rep.detail["p"] = p
        rep.detail["c_decay"] = c_decay
        rep.detail["core_constant"] = core[key]
        reports.append(rep)
    return reports
