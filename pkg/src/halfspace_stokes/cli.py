"""Command-line driver: configuration loading, experiment orchestration,
CSV/figure emission and run manifests.

Every run writes its delimited outputs plus rendered matplotlib figures
into the output directory, together with exactly one ``manifest.json``
recording the command, config hash, seed, tool version, wall time and
output paths.  Exit codes: 0 all verdicts PASS, 1 FAIL verdicts,
2 configuration errors, 3 numerical failures (diagnostics persisted).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .core import (GridField, SectorPoint, SolverConfig, field_to_csv,
                   sample_field)
from .kernels import KernelQuery, eval_kernel, scaling_gap, KERNEL_IDS
from .mild_ns import picard_solve
from .report import EstimateReport
from .resolvent import fit_resolvent_estimates, solve_resolvent
from .semigroup import (apply_dirichlet_heat, apply_semigroup, build_contour,
                        fit_semigroup_estimates, heat_reflection_oracle)
from .uloc_norms import UlocSpec, uloc_norm
from .verify import (fit_bilinear_estimates, liouville_pressure_check,
                     nonsteady_parasitic_residual, parasitic_residual)

COMMANDS = ("resolvent", "semigroup", "ns-mild", "verify-kernels",
            "verify-estimates", "verify-liouville")

__all__ = ["RunManifest", "run", "emit_plot_data", "main", "COMMANDS"]


@dataclass
class RunManifest:
    """Provenance record; exactly one per output directory."""

    command: str
    config_hash: str
    seed: int
    tool_version: str
    wall_time_s: float
    outputs: list = field(default_factory=list)

    def write(self, out_dir) -> str:
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _resolve_threads(threads) -> int:
    if threads:
        return int(threads)
    env = os.environ.get("HS_STOKES_THREADS", "")
    return int(env) if env.strip() else 0


def _apply_threads(n: int) -> None:
    if n <= 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=n)
    except ImportError:
        pass


def emit_plot_data(reports, out_dir):
    """Tidy per-estimate CSV (one observation per row) plus a rendered
    constants figure; the CSV is header-only when the set is empty."""
    paths = []
    csv_path = os.path.join(out_dir, "estimates.csv")
    with open(csv_path, "w") as fh:
        fh.write("estimate_id,samples,fitted_constant,stability_ratio,"
                 "shape_residual,verdict\n")
        for rep in reports:
            fh.write(f"{rep.estimate_id},{rep.samples},"
                     f"{rep.fitted_constant:.17g},"
                     f"{rep.stability_ratio:.17g},"
                     f"{rep.shape_residual:.17g},{rep.verdict}\n")
    paths.append(csv_path)
    if reports:
        fig, ax = plt.subplots(figsize=(8, 0.45 * len(reports) + 1.5))
        names = [r.estimate_id for r in reports]
        vals = [r.fitted_constant for r in reports]
        colors = ["tab:green" if r.passed else "tab:red" for r in reports]
        ax.barh(range(len(names)), vals, color=colors)
        ax.set_yticks(range(len(names)), names, fontsize=7)
        ax.set_xlabel("fitted constant")
        fig.tight_layout()
        fig_path = os.path.join(out_dir, "fitted_constants.png")
        fig.savefig(fig_path, dpi=110)
        plt.close(fig)
        paths.append(fig_path)
    return paths


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")
    return path


def _default_field(cfg: SolverConfig, grid):
    center = tuple([cfg.box_length / 2.0] * grid.d_tangential
                   + [0.35 * cfg.height])
    f = sample_field(grid, "div_free_bump", center=center,
                     width=0.12 * cfg.box_length)
    return GridField(grid, cfg.data_amplitude * f.values)


def _run_resolvent(cfg, out_dir, seed):
    grid = cfg.grid()
    f = _default_field(cfg, grid)
    sol = solve_resolvent(cfg.lam, f, tol=1e-2)
    outputs = []
    for name, fld in (("velocity.csv", sol.u), ("pressure.csv", sol.p)):
        path = os.path.join(out_dir, name)
        field_to_csv(fld, path)
        outputs.append(path)
    R_hi = cfg.height - 1.0
    R_list = list(np.linspace(max(1.0, 0.25 * R_hi), R_hi, 5))
    check = liouville_pressure_check(sol, R_list)
    diag = {k: v for k, v in sol.diagnostics.items()}
    diag["pressure_decay_profile"] = [float(v) for v in check["profile"]]
    diag["pressure_decay_slope"] = check["slope"]
    dpath = os.path.join(out_dir, "diagnostics.json")
    with open(dpath, "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(dpath)
    fig, ax = plt.subplots()
    ax.loglog(R_list, np.maximum(check["profile"], 1e-300), "o-")
    ax.set_xlabel("slab height R")
    ax.set_ylabel("tangential pressure-gradient mass")
    fig.tight_layout()
    fpath = os.path.join(out_dir, "pressure_decay.png")
    fig.savefig(fpath, dpi=110)
    plt.close(fig)
    outputs.append(fpath)
    ok = max(diag["pde_residual"], diag["div_residual"],
             diag["bc_residual"]) <= 1e-6
    return ok, outputs


def _run_semigroup(cfg, out_dir, seed):
    grid = cfg.grid()
    f = _default_field(cfg, grid)
    t = cfg.horizon
    contour = build_contour(t, eta=cfg.eta, kappa=cfg.kappa,
                            n_nodes=cfg.n_nodes, tol=cfg.quadrature_tol)
    u = apply_semigroup(t, f, contour)
    dl = apply_dirichlet_heat(t, f, contour)
    oracle = heat_reflection_oracle(t, f)
    dev = float(np.max(np.abs(dl.values - oracle.values))
                / max(np.max(np.abs(oracle.values)), 1e-300))
    outputs = []
    path = os.path.join(out_dir, "semigroup_field.csv")
    field_to_csv(u, path)
    outputs.append(path)
    outputs.append(_write_rows(
        os.path.join(out_dir, "contour.csv"),
        "re_lambda,im_lambda,re_weight,im_weight",
        [(lam.real, lam.imag, w.real, w.imag) for lam, w in contour.nodes]))
    diag = {"dl_oracle_deviation": dev,
            "scalar_check_error": contour.scalar_check_error,
            "truncation_radius": contour.truncation_radius}
    dpath = os.path.join(out_dir, "diagnostics.json")
    with open(dpath, "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(dpath)
    fig, ax = plt.subplots()
    lam = np.array([n[0] for n in contour.nodes])
    ax.plot(lam.real, lam.imag, ".", ms=3)
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    ax.set_title("Dunford contour nodes")
    fig.tight_layout()
    fpath = os.path.join(out_dir, "contour.png")
    fig.savefig(fpath, dpi=110)
    plt.close(fig)
    outputs.append(fpath)
    return dev <= 1e-5, outputs


def _run_ns_mild(cfg, out_dir, seed):
    grid = cfg.grid()
    f = _default_field(cfg, grid)
    spec = UlocSpec(cfg.q, cfg.rho)
    scale = cfg.data_amplitude / max(uloc_norm(f, spec), 1e-300)
    u0 = GridField(grid, scale * f.values)
    traj = picard_solve(u0, cfg.horizon, cfg.time_steps, cfg.q,
                        tol=cfg.fixed_point_tol, rho=cfg.rho,
                        contour_nodes=max(64, cfg.n_nodes // 2),
                        contour_tol=max(cfg.quadrature_tol, 1e-4))
    outputs = [_write_rows(
        os.path.join(out_dir, "norms.csv"),
        "t,uloc_norm,weighted_sup,weighted_grad",
        [(t, *triple) for t, triple in zip(traj.times, traj.norms)])]
    outputs.append(_write_rows(
        os.path.join(out_dir, "contraction.csv"),
        "sweep,gap,ratio",
        [(h["sweep"], h["gap"],
          h["ratio"] if h["ratio"] is not None else math.nan)
         for h in traj.contraction_history]))
    for i, state in enumerate(traj.states):
        path = os.path.join(out_dir, f"trajectory_{i:03d}.csv")
        field_to_csv(state, path)
        outputs.append(path)
    fig, ax = plt.subplots()
    trip = np.array(traj.norms)
    for j, lab in enumerate(("uloc", "weighted sup", "weighted grad")):
        ax.plot(traj.times, trip[:, j], "o-", label=lab)
    ax.set_xlabel("t")
    ax.legend()
    ax.set_title(f"mild solution norms ({traj.verdict})")
    fig.tight_layout()
    fpath = os.path.join(out_dir, "norms.png")
    fig.savefig(fpath, dpi=110)
    plt.close(fig)
    outputs.append(fpath)
    return traj.verdict == "CONVERGED", outputs


def _kernel_oracle_rows(dimension, seed, n_points=20):
    """Relative error of k1 against its closed-form full-space oracle."""
    from scipy.special import k0
    rng = np.random.default_rng(seed)
    lam = SectorPoint(1.0, 0.0)
    rows = []
    for _ in range(n_points):
        y = rng.uniform(0.3, 4.0, size=dimension)
        r = float(np.sqrt(np.sum(y**2)))
        q = KernelQuery("k1", (0, 0, 0), lam, tuple(y[:-1]), float(y[-1]))
        val = eval_kernel(q).value
        oracle = (math.exp(-r) / (4.0 * math.pi * r) if dimension == 3
                  else k0(r) / (2.0 * math.pi))
        rows.append((r, float(abs(val - oracle) / abs(oracle))))
    return rows


def _run_verify_kernels(cfg, out_dir, seed):
    rows = _kernel_oracle_rows(cfg.dimension, seed)
    outputs = [_write_rows(os.path.join(out_dir, "kernel_ratio.csv"),
                           "radius,relative_error", rows)]
    gaps = []
    for kid in KERNEL_IDS:
        for lam in (SectorPoint(4.0, 0.0), SectorPoint(9.0, 0.0),
                    SectorPoint(2.0, math.pi / 3)):
            g = scaling_gap(kid, lam, (0.8,) * (cfg.dimension - 1), 0.6, 0.4)
            gaps.append((kid, lam.modulus, lam.argument, float(g)))
    outputs.append(_write_rows(os.path.join(out_dir, "scaling_gaps.csv"),
                               "kernel,lambda_modulus,lambda_argument,gap",
                               gaps))
    fig, ax = plt.subplots()
    rr = np.array(rows)
    ax.semilogy(rr[:, 0], np.maximum(rr[:, 1], 1e-18), "o")
    ax.set_xlabel("|y|")
    ax.set_ylabel("relative error vs closed form")
    fig.tight_layout()
    fpath = os.path.join(out_dir, "kernel_ratio.png")
    fig.savefig(fpath, dpi=110)
    plt.close(fig)
    outputs.append(fpath)
    ok = max(r[1] for r in rows) <= 1e-8 and max(g[3] for g in gaps) <= 1e-8
    return ok, outputs


def _run_verify_estimates(cfg, out_dir, seed):
    lam_sweep = np.logspace(-1, 1, 5)
    t_sweep = np.logspace(-1, 0.5, 4)
    reports = []
    reports += fit_resolvent_estimates(cfg.q, cfg.q, lam_sweep, trials=1,
                                       seed=seed)
    reports += fit_semigroup_estimates(cfg.q, cfg.q, t_sweep, trials=1,
                                       seed=seed)
    reports += fit_bilinear_estimates(cfg.q, cfg.q, t_sweep, trials=1,
                                      side="time", seed=seed)
    outputs = list(emit_plot_data(reports, out_dir))
    for rep in reports:
        name = rep.estimate_id.replace(":", "_").replace("=", "")
        path = os.path.join(out_dir, f"report_{name}.json")
        rep.to_json(path)
        outputs.append(path)
    return all(r.passed for r in reports), outputs


def _run_verify_liouville(cfg, out_dir, seed):
    grid = cfg.grid()
    znodes = grid.znodes()
    steady = parasitic_residual(cfg.lam, [1.0, -0.7][: cfg.dimension - 1],
                                znodes)
    nonsteady = nonsteady_parasitic_residual(
        math.sin, np.linspace(0.25, 0.75 * cfg.height, 8), [0.5, 1.5],
        D_prime=math.cos)
    f = _default_field(cfg, grid)
    sol = solve_resolvent(cfg.lam, f, tol=1e-2)
    R_hi = cfg.height - 1.0
    R_list = list(np.linspace(max(1.0, 0.25 * R_hi), R_hi, 5))
    clean = liouville_pressure_check(sol, R_list)
    injected = liouville_pressure_check(sol, R_list, parasitic_D=[1.0])
    outputs = [_write_rows(
        os.path.join(out_dir, "pressure_profile.csv"),
        "R,clean_mass,injected_mass",
        [(R, c, i) for R, c, i in
         zip(R_list, clean["profile"], injected["profile"])])]
    diag = {"steady_parasitic_residual": steady,
            "nonsteady_parasitic_residual": nonsteady,
            "clean_slope": clean["slope"],
            "clean_decaying": clean["decaying"],
            "injected_slope": injected["slope"],
            "injected_flagged": injected["flagged_parasitic"]}
    dpath = os.path.join(out_dir, "diagnostics.json")
    with open(dpath, "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(dpath)
    fig, ax = plt.subplots()
    ax.loglog(R_list, np.maximum(clean["profile"], 1e-300), "o-",
              label="decaying pressure")
    ax.loglog(R_list, np.maximum(injected["profile"], 1e-300), "s--",
              label="injected parasitic")
    ax.set_xlabel("slab height R")
    ax.legend()
    fig.tight_layout()
    fpath = os.path.join(out_dir, "pressure_profile.png")
    fig.savefig(fpath, dpi=110)
    plt.close(fig)
    outputs.append(fpath)
    ok = (steady <= 1e-8 and nonsteady <= 1e-8 and clean["decaying"]
          and injected["flagged_parasitic"])
    return ok, outputs


_RUNNERS = {
    "resolvent": _run_resolvent,
    "semigroup": _run_semigroup,
    "ns-mild": _run_ns_mild,
    "verify-kernels": _run_verify_kernels,
    "verify-estimates": _run_verify_estimates,
    "verify-liouville": _run_verify_liouville,
}


def run(command, config_path, out_dir, seed=0, threads=0) -> int:
    """Execute one subcommand; returns the process exit status."""
    if command not in _RUNNERS:
        print(f"unknown command {command!r}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    try:
        cfg = SolverConfig.from_json(config_path)
        with open(config_path, "rb") as fh:
            config_hash = hashlib.sha256(fh.read()).hexdigest()
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _apply_threads(_resolve_threads(threads))
    os.makedirs(out_dir, exist_ok=True)
    manifest = RunManifest(command, config_hash, int(seed), __version__, 0.0)
    try:
        ok, outputs = _RUNNERS[command](cfg, out_dir, int(seed))
    except Exception as exc:  # numerical failure: persist diagnostics
        epath = os.path.join(out_dir, "error.json")
        with open(epath, "w") as fh:
            json.dump({"error": str(exc), "type": type(exc).__name__},
                      fh, indent=2)
            fh.write("\n")
        manifest.outputs = [epath]
        manifest.wall_time_s = time.perf_counter() - start
        manifest.write(out_dir)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest.outputs = sorted(outputs)
    manifest.wall_time_s = time.perf_counter() - start
    manifest.write(out_dir)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hs-stokes",
        description="half-space Stokes resolvent/semigroup verification runs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0 = auto / HS_STOKES_THREADS)")
    args = parser.parse_args(argv)
    return run(args.command, args.config, args.out, seed=args.seed,
               threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
