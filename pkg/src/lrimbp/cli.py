"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 dynamics anomaly (divergence, bound violation, domain breach).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import experiments as ex
from .expops import Propagator, dense_expm, dense_phi_action
from .potential import compute_bounds
from .schemes import SchemeKind
from .spatial import GridSpec, dense_laplacian

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_ANOMALY = 0, 1, 2, 3
CHECK_N_CAP = 32
CHECK_TOL = 1e-10


class UsageError(Exception):
    pass


def fmt(x):
    """Shortest round-trip decimal; '' for None."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _csv_list(kind):
    def parse(text):
        return [kind(s) for s in text.split(",") if s.strip()]
    return parse


# --- bounds -----------------------------------------------------------------

def cmd_bounds(args, out):
    if args.potential == "double-well" and (args.theta is not None or args.theta_c is not None):
        raise UsageError("--theta/--theta-c only apply to flory-huggins")
    theta = 0.8 if args.theta is None else args.theta
    theta_c = 1.6 if args.theta_c is None else args.theta_c
    try:
        pot = ex.make_potential(args.potential, theta, theta_c)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    b = compute_bounds(pot)
    rows = [
        ("potential", pot.label()),
        ("beta", b.beta), ("omega0", b.omega0), ("omega1", b.omega1),
        ("delta", b.delta), ("delta0", b.delta0),
        ("ceiling_regime", "enlarged" if b.enlarged else "generic"),
        ("dt_max_first", b.dt_max_first), ("dt_max_second", b.dt_max_second),
        ("dt_max_second_generic", b.dt_max_second_generic),
        ("F0", b.F0), ("F1", b.F1), ("F2", b.F2), ("F3", b.F3),
        ("F1_tilde", b.F1_tilde), ("F2_tilde", b.F2_tilde), ("F4", b.F4),
    ]
    ceilings = [(k.label, b.ceiling(k.order)) for k in SchemeKind]

    def show(v):
        return v if isinstance(v, str) else fmt(v)

    print(f"{'quantity':<24}{'value':>24}", file=out)
    for k, v in rows:
        print(f"{k:<24}{show(v):>24}", file=out)
    print(f"{'scheme':<24}{'dt ceiling':>24}", file=out)
    for k, v in ceilings:
        note = "" if SchemeKind.parse(k).is_lri else "  (baseline, reporting only)"
        print(f"{k:<24}{fmt(v):>24}{note}", file=out)
    print("", file=out)
    for k, v in rows:
        print(f"{k}={show(v)}", file=out)
    for k, v in ceilings:
        print(f"dt_max_{k}={fmt(v)}", file=out)
    return EXIT_OK


# --- check-operator ---------------------------------------------------------

def cmd_check_operator(args, out):
    n = args.n
    if n > CHECK_N_CAP:
        raise UsageError(f"--n {n} exceeds the dense-oracle cap {CHECK_N_CAP}")
    if n < 3:
        raise UsageError("--n must be at least 3")
    if args.t < 0 or args.eps < 0:
        raise UsageError("--t and --eps must be non-negative")
    h = 1.0 / (n - 1) if args.bc == "neumann" else 1.0 / n
    grid = GridSpec((n,) * args.dim, (1.0,) * args.dim, args.bc)
    A = args.eps**2 * dense_laplacian(grid)
    E = dense_expm(A, args.t)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    u = rng.uniform(-1.0, 1.0, grid.shape)

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))

    checks = []
    for method in ("fft", "matrix"):
        p = Propagator(grid, args.eps, args.t, method=method)
        checks.append((f"exp[{method}]", rel(p.apply_exp(u), (E @ u.ravel()).reshape(grid.shape))))
        for k in (1, 2):
            ref = dense_phi_action(A, args.t, k, u).reshape(grid.shape)
            checks.append((f"phi{k}[{method}]", rel(p.apply_phi(k, u), ref)))
    norm = float(np.max(np.sum(np.abs(E), axis=1)))
    checks.append(("contraction_dense_norm_excess", max(0.0, norm - 1.0)))
    p = Propagator(grid, args.eps, args.t)
    excess = float(np.max(np.abs(p.apply_exp(u))) - np.max(np.abs(u)))
    checks.append(("contraction_fast_supnorm_excess", max(0.0, excess)))

    print(f"grid n={n} dim={args.dim} bc={args.bc} h={fmt(h)} eps={fmt(args.eps)} t={fmt(args.t)}",
          file=out)
    failed = []
    for name, val in checks:
        ok = val <= CHECK_TOL
        print(f"{name:<34}{val:.3e}  {'ok' if ok else 'FAIL'}", file=out)
        if not ok:
            failed.append(name)
    if failed:
        print("failing checks: " + ", ".join(failed), file=out)
        return EXIT_VERIFY
    return EXIT_OK


# --- config handling --------------------------------------------------------

def _resolve_config(cls, args, mapping, presets=None):
    """Defaults < preset < JSON file < explicit flags."""
    data = dict(presets or {})
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        names = {f.name for f in fields(cls)}
        unknown = set(loaded) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        data.update(loaded)
    for attr, key in mapping.items():
        val = getattr(args, attr)
        if val is not None:
            data[key] = val
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _check_writable(path: Path):
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UsageError(f"cannot write to {path}")
    if path.exists() and (path.is_dir() or not os.access(path, os.W_OK)):
        raise UsageError(f"cannot write to {path}")


# --- converge ---------------------------------------------------------------

WAVE_FLAGS = {"eps": "eps", "h_denom": "h_denom", "schemes": "schemes",
              "dt_divisors": "dt_divisors", "dim": "dim", "method": "method", "jobs": "jobs"}


def convergence_csv(table):
    lines = []
    for scheme, dt, ceiling in table.uncertified:
        lines.append(f"# WARNING uncertified dt scheme={scheme} dt={fmt(dt)} ceiling={fmt(ceiling)}")
    lines.append("scheme,dt,l2_error,l2_rate,linf_error,linf_rate")
    for r in table.rows:
        lines.append(",".join([r.scheme, fmt(r.dt), fmt(r.l2), fmt(r.l2_rate),
                               fmt(r.linf), fmt(r.linf_rate)]))
    return "\n".join(lines) + "\n"


def cmd_converge(args, out):
    if args.full_scale and args.h_denom is not None:
        raise UsageError("--full-scale conflicts with --h-denom")
    presets = {"h_denom": ex.FULL_WAVE_H_DENOM} if args.full_scale else None
    cfg = _resolve_config(ex.WaveConfig, args, WAVE_FLAGS, presets)
    if args.dump_config:
        print(json.dumps(vars(cfg), indent=2, sort_keys=True), file=out)
        return EXIT_OK
    if not args.out:
        raise UsageError("--out is required")
    path = Path(args.out)
    _check_writable(path)
    table = ex.run_convergence(cfg)
    text = convergence_csv(table)
    try:
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc
    for scheme, dt, ceiling in table.uncertified:
        print(f"warning: {scheme} dt={fmt(dt)} exceeds certified ceiling {fmt(ceiling)}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


# --- coarsen ----------------------------------------------------------------

COARSEN_FLAGS = {"potential": "potential", "theta": "theta", "theta_c": "theta_c",
                 "eps": "eps", "h_denom": "h_denom", "dt": "dt", "scheme": "scheme",
                 "T": "T", "seed": "seed", "lo": "lo", "hi": "hi",
                 "snapshot_times": "snapshot_times", "dim": "dim", "method": "method",
                 "mbp_tol": "mbp_tol"}


def series_csv(report):
    lines = ["step,time,sup_norm,energy"]
    for m, (t, s, e) in enumerate(zip(report.times, report.sup_norms, report.energies)):
        lines.append(f"{m},{fmt(t)},{fmt(s)},{fmt(e)}")
    return "\n".join(lines) + "\n"


def snapshot_sidecar(cfg, grid, snap):
    meta = {
        "nx": grid.n_axis[0],
        "ny": grid.n_axis[1] if grid.dim > 1 else 1,
        "h": grid.h_axis[0],
        "t": snap.realized,
        "t_requested": snap.requested,
        "step": snap.step,
        "eps": cfg.eps,
        "bc": grid.bc,
        "potential": cfg.make_potential().label(),
        "seed": cfg.seed,
    }
    if grid.dim > 2:
        meta["nz"] = grid.n_axis[2]
    return meta


def cmd_coarsen(args, out):
    if args.full_scale and (args.h_denom is not None or args.T is not None):
        raise UsageError("--full-scale conflicts with --h-denom/--T")
    if args.potential == "double-well" and (args.theta is not None or args.theta_c is not None):
        raise UsageError("--theta/--theta-c only apply to flory-huggins")
    presets = {"h_denom": ex.FULL_COARSEN_H_DENOM, "T": 120.0} if args.full_scale else None
    cfg = _resolve_config(ex.CoarsenConfig, args, COARSEN_FLAGS, presets)
    if args.dump_config:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True), file=out)
        return EXIT_OK
    if not args.out_dir:
        raise UsageError("--out-dir is required")
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out_dir}: {exc}") from exc
    _check_writable(out_dir / "series.csv")

    report = ex.run_coarsening(cfg)
    grid = cfg.grid()
    with open(out_dir / "series.csv", "w", newline="\n", encoding="ascii") as fh:
        fh.write(series_csv(report))
    for i, snap in enumerate(report.snapshots):
        stem = out_dir / f"snapshot_{i:03d}"
        snap.field.astype("<f8").tofile(stem.with_suffix(".bin"))
        with open(stem.with_suffix(".json"), "w", newline="\n") as fh:
            json.dump(snapshot_sidecar(cfg, grid, snap), fh, sort_keys=True)
            fh.write("\n")
    summary = {
        "beta": report.beta,
        "max_sup_norm": max(report.sup_norms),
        "steps_done": len(report.sup_norms) - 1,
        "mbp_violation_step": report.mbp_violation_step,
        "diverged_step": report.diverged_step,
        "domain_error_step": report.domain_error_step,
        "domain_error": report.domain_error,
        "energy_monotone": report.energy.monotone,
        "energy_violations": report.energy.violations,
    }
    with open(out_dir / "report.json", "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"max sup-norm {fmt(summary['max_sup_norm'])} (beta {fmt(report.beta)}), "
          f"{summary['steps_done']} steps", file=out)
    if report.anomaly:
        if report.domain_error_step is not None:
            print(f"ANOMALY: potential domain breach at step {report.domain_error_step}: "
                  f"{report.domain_error}", file=out)
        if report.mbp_violation_step is not None:
            print(f"ANOMALY: bound violated at step {report.mbp_violation_step}", file=out)
        if report.diverged_step is not None:
            print(f"ANOMALY: non-finite values at step {report.diverged_step}", file=out)
        return EXIT_ANOMALY
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrimbp",
        description="Low regularity integrators for Allen-Cahn type equations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="step-size ceilings and constants of a potential")
    p.add_argument("--potential", choices=["double-well", "flory-huggins"], default="double-well")
    p.add_argument("--theta", type=float)
    p.add_argument("--theta-c", type=float)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("check-operator", help="fast transforms vs dense oracles")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--bc", choices=["neumann", "periodic"], default="neumann")
    p.add_argument("--dim", type=int, choices=[1, 2], default=1)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_operator)

    p = sub.add_parser("converge", help="traveling-wave temporal convergence table")
    p.add_argument("--config")
    p.add_argument("--eps", type=float)
    p.add_argument("--h-denom", type=int)
    p.add_argument("--schemes", type=_csv_list(str))
    p.add_argument("--dt-divisors", type=_csv_list(int))
    p.add_argument("--dim", type=int, choices=[1, 2, 3])
    p.add_argument("--method", choices=["fft", "matrix"])
    p.add_argument("--jobs", type=int)
    p.add_argument("--full-scale", action="store_true", help="h = 1/2048")
    p.add_argument("--out")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("coarsen", help="seeded coarsening run with series and snapshots")
    p.add_argument("--config")
    p.add_argument("--potential", choices=["double-well", "flory-huggins"])
    p.add_argument("--theta", type=float)
    p.add_argument("--theta-c", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--h-denom", type=int)
    p.add_argument("--dim", type=int, choices=[1, 2, 3])
    p.add_argument("--dt", type=float)
    p.add_argument("--scheme")
    p.add_argument("--T", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--snapshot-times", type=_csv_list(float))
    p.add_argument("--mbp-tol", type=float)
    p.add_argument("--method", choices=["fft", "matrix"])
    p.add_argument("--full-scale", action="store_true", help="h = 1/1024, T = 120")
    p.add_argument("--out-dir")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=cmd_coarsen)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
