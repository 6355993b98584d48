"""Command-line driver.

Subcommands: tensor-check, cloak-converge, resonance-scan, invariance,
green-verify.  Every run writes its resolved configuration, a delimited
output (CSV or JSON), and a companion figure into the output directory.

Exit codes: 0 pass, 1 invariant failure, 2 configuration error,
3 solver error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, dump_config, load_config
from .errors import ConfigError, RescloakError, ResonanceSuspectedError, SolverError
from .mesh import concentric_disc_mesh
from .ntd import (
    TractionBasis,
    auto_grade,
    cloak_mesh,
    convergence_study,
    invariance_check,
    resonance_scan,
)
from .potentials import LameKernelParams, kupradze_tensor, single_layer_eval
from .residual import verify_admissible
from .tensors import (
    IsotropicModuli,
    check_symmetries,
    convexity_constant,
    make_isotropic_residual,
)
from . import plots

EXIT_PASS = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="key = value config file")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--h-list", type=str, default=None, help="comma-separated scales")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--h-mesh", type=float, default=None)
    p.add_argument("--order", type=int, choices=(1, 2), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    for key in ("h", "kappa", "alpha", "beta", "gamma", "delta", "order", "seed", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            updates[key] = val
    if args.n_max is not None:
        updates["n_max"] = args.n_max
    if args.h_mesh is not None:
        updates["h_mesh"] = args.h_mesh
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.h_list is not None:
        updates["h_list"] = tuple(float(v) for v in args.h_list.split(",") if v.strip())
    for key in ("rho_min", "rho_max", "rho_steps", "r0", "r1"):
        val = getattr(args, key, None)
        if val is not None:
            updates[key] = val
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "resolved_config.txt")
    return out


def cmd_tensor_check(args) -> int:
    cfg = _resolve(args)
    out = _prepare_out(cfg)
    moduli = IsotropicModuli(cfg.lam0, cfg.mu0)
    field = cfg.residual_field()
    report = verify_admissible(field, moduli, 2.0, n_samples=50)

    probe = np.array([0.55, 0.05])
    c_probe = make_isotropic_residual(moduli, field.t(probe), 2)
    major, minor = check_symmetries(c_probe)
    t_nonzero = bool(np.any(np.abs(field.t(probe)) > 0.0))
    result = {
        "major_symmetric": major,
        "minor_symmetric": minor,
        "symmetry_ok": report.symmetry_ok,
        "divfree_max_residual": report.divfree_max_residual,
        "boundary_traction_max": report.boundary_traction_max,
        "min_convexity_over_samples": report.min_convexity_over_samples,
        "base_convexity": convexity_constant(
            make_isotropic_residual(moduli, np.zeros((2, 2)), 2)
        ),
    }
    (out / "tensor_check.json").write_text(json.dumps(result, indent=2) + "\n")
    ok = (
        major
        and report.symmetry_ok
        and report.divfree_max_residual <= 1e-8
        and report.boundary_traction_max == 0.0
        and report.min_convexity_over_samples > 0.0
        and (not t_nonzero or not minor)
    )
    print(json.dumps(result, indent=2))
    print("tensor-check:", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_INVARIANT


def cmd_cloak_converge(args) -> int:
    cfg = _resolve(args)
    out = _prepare_out(cfg)
    basis = TractionBasis(cfg.n_max)
    result = convergence_study(
        cfg.cloak_config(),
        cfg.h_list,
        basis,
        h_mesh=cfg.h_mesh,
        order=cfg.order,
        workers=cfg.workers,
    )
    with open(out / "study.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(
            ["h", "n_max", "h_mesh", "norm_diff", "norm_diff_plain", "slope_running", "wall_time_s"]
        )
        for r in result.rows:
            wr.writerow(
                [r.h, r.n_max, r.h_mesh, r.norm_diff, r.norm_diff_plain, r.slope_running, r.wall_time_s]
            )
    plots.convergence_figure(result.rows, out / "study.png")
    summary = {
        "slope": result.slope,
        "decreasing": result.decreasing,
        "rows": len(result.rows),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    if result.slope is None:
        print("single scale: table only, no slope")
        return EXIT_PASS
    ok = result.slope >= 0.7 and result.decreasing
    print("cloak-converge:", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_INVARIANT


def cmd_resonance_scan(args) -> int:
    cfg = _resolve(args)
    out = _prepare_out(cfg)
    rho = np.linspace(cfg.rho_min, cfg.rho_max, cfg.rho_steps)
    scan = resonance_scan(
        rho,
        rho,
        kappa=cfg.kappa,
        r0=cfg.r0,
        r1=cfg.r1,
        moduli=IsotropicModuli(cfg.lam0, cfg.mu0),
        residual=cfg.residual_field(),
        with_lossy=args.with_lossy,
        beta=cfg.beta,
        h_mesh=max(cfg.h_mesh, 0.15),
        order=cfg.order,
    )
    with open(out / "scan.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["rho0", "rho1", "indicator", "with_lossy"])
        for i, r0v in enumerate(scan.rho0):
            for j, r1v in enumerate(scan.rho1):
                wr.writerow([r0v, r1v, scan.indicator[i, j], int(scan.with_lossy)])
    plots.scan_figure(scan.rho0, scan.rho1, scan.indicator, scan.with_lossy, out / "scan.png")
    med = scan.median
    dips = int(np.sum(scan.indicator <= 1e-2 * med))
    print(f"min={scan.min:.4e} median={med:.4e} dip_cells={dips}")
    if args.with_lossy:
        ok = scan.min >= 0.1 * med
        print("resonance-scan (lossy):", "PASS (no dips)" if ok else "FAIL (dip present)")
    else:
        ok = dips >= 1
        print("resonance-scan (lossless):", "PASS (dips found)" if ok else "FAIL (no dips)")
    return EXIT_PASS if ok else EXIT_INVARIANT


def cmd_invariance(args) -> int:
    cfg = _resolve(args)
    out = _prepare_out(cfg)
    basis = TractionBasis(cfg.n_max)
    cloak = cfg.cloak_config()
    h_meshes = [cfg.h_mesh, cfg.h_mesh / 2.0] if args.refine else [cfg.h_mesh]
    diffs = []
    for hm in h_meshes:
        mesh_p = cloak_mesh((0.5, 1.0), hm)
        mesh_v = cloak_mesh((cloak.h / 2.0, cloak.h), hm)
        diffs.append(invariance_check(cloak, mesh_p, mesh_v, basis, order=cfg.order))
    with open(out / "invariance.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["h_mesh", "rel_diff"])
        for hm, d in zip(h_meshes, diffs):
            wr.writerow([hm, d])
    plots.invariance_figure(h_meshes, diffs, out / "invariance.png")
    for hm, d in zip(h_meshes, diffs):
        print(f"h_mesh={hm:g}: relative difference = {d:.4e}")
    ok = diffs[0] <= 0.05
    print("invariance:", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_INVARIANT


def _navier_residual(field, pt, lam, mu, eta, step=1e-3):
    e = np.eye(2)
    u0 = field(pt)
    lap = sum(
        field(pt + step * e[d]) + field(pt - step * e[d]) - 2.0 * u0 for d in range(2)
    ) / step ** 2

    def div(q):
        return sum(
            (field(q + step * e[d])[d] - field(q - step * e[d])[d]) / (2.0 * step)
            for d in range(2)
        )

    gd = np.array(
        [(div(pt + step * e[d]) - div(pt - step * e[d])) / (2.0 * step) for d in range(2)]
    )
    res = mu * lap + (lam + mu) * gd + eta ** 2 * u0
    return float(np.max(np.abs(res)) / max(np.max(np.abs(eta ** 2 * u0)), 1e-300))


def cmd_green_verify(args) -> int:
    cfg = _resolve(args)
    out = _prepare_out(cfg)
    params = LameKernelParams(cfg.lam0, cfg.mu0, cfg.kappa)
    src = np.zeros(2)
    rng = np.random.default_rng(cfg.seed)
    labels, residuals = [], []
    for k in range(8):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        rad = rng.uniform(0.7, 1.5)
        pt = rad * np.array([np.cos(theta), np.sin(theta)])
        col = k % 2
        fund = lambda x: kupradze_tensor(x, src, params, 2)[:, col]
        labels.append(f"kernel col {col} at r={rad:.2f}")
        residuals.append(_navier_residual(fund, pt, cfg.lam0, cfg.mu0, cfg.kappa))
    dens = lambda t: np.array([np.cos(t), np.sin(2.0 * t)])
    lay = lambda x: single_layer_eval(dens, x, params, 256, radius=1.8)
    for rad in (0.4, 0.9):
        pt = rad * np.array([np.cos(0.3), np.sin(0.3)])
        labels.append(f"single layer at r={rad:.2f}")
        residuals.append(_navier_residual(lay, pt, cfg.lam0, cfg.mu0, cfg.kappa))
    with open(out / "green_verify.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["case", "relative_residual"])
        for lbl, r in zip(labels, residuals):
            wr.writerow([lbl, r])
    plots.residual_figure(labels, residuals, 1e-4, out / "green_verify.png")
    worst = max(residuals)
    print(f"max Navier FD residual: {worst:.4e}")
    ok = worst <= 1e-4
    print("green-verify:", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rescloak", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tensor-check", help="tensor and residual-field admissibility suite")
    _add_common(p)
    p.set_defaults(func=cmd_tensor_check)

    p = sub.add_parser("cloak-converge", help="NtD convergence study over h_list")
    _add_common(p)
    p.set_defaults(func=cmd_cloak_converge)

    p = sub.add_parser("resonance-scan", help="transmission-problem stability scan")
    _add_common(p)
    p.add_argument("--with-lossy", action="store_true", help="add i*beta to the annulus density")
    p.add_argument("--rho-min", type=float, default=None)
    p.add_argument("--rho-max", type=float, default=None)
    p.add_argument("--rho-steps", type=int, default=None)
    p.add_argument("--r0", type=float, default=None)
    p.add_argument("--r1", type=float, default=None)
    p.set_defaults(func=cmd_resonance_scan)

    p = sub.add_parser("invariance", help="physical vs small-inclusion NtD comparison")
    _add_common(p)
    p.add_argument("--refine", action="store_true", help="also run at half the mesh size")
    p.set_defaults(func=cmd_invariance)

    p = sub.add_parser("green-verify", help="fundamental-solution and layer-potential checks")
    _add_common(p)
    p.set_defaults(func=cmd_green_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResonanceSuspectedError, SolverError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RescloakError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
