"""Command-line entry point.

Exit codes: 0 success, 1 parameter validation failure, 2 usage or config
error, 3 runtime or numerical failure (including unwritable outputs).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .experiments import FIGURES, OutputError, ratio_grid, run_figure, spec_for, write_text
from .generator import build_generator
from .integrator import IntegrationError, NotStiffError, radau_evolve, stiffness_ratio, write_trajectory_csv
from .model import TWO_PI, compute_detunings, validate_params, vacuum_state
from .steady import DegenerateDetuning, ScanFailure, c200_root_check, optimal_drive
from .sweep import MODES, default_horizon, matrix_csv, omega0_grid, records_csv, sweep_1d, sweep_2d

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3
WORKERS_ENV = "MAGNOBLOCK_WORKERS"


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def resolve_workers(flag: int | None, environ=os.environ) -> int:
    """The --workers flag wins over the environment variable; default 1."""
    if flag is not None:
        value, source = flag, "--workers"
    elif environ.get(WORKERS_ENV, "").strip():
        raw = environ[WORKERS_ENV].strip()
        try:
            value = int(raw)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        source = WORKERS_ENV
    else:
        return 1
    if value < 1:
        raise UsageError(f"{source} must be >= 1, got {value}")
    return value


def write_manifest(path: Path, cfg: RunConfig, command: list[str], started: str, outputs) -> Path:
    manifest = {
        "tool_version": __version__,
        "command": command,
        "config_snapshot": cfg.snapshot(),
        "started": started,
        "finished": _now(),
        "output_paths": [str(p) for p in outputs],
    }
    return write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


class _Invalid(Exception):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = problems


def _require_valid(cfg: RunConfig) -> None:
    problems = validate_params(cfg.params)
    if problems:
        raise _Invalid(problems)


def cmd_check(args, cfg: RunConfig) -> int:
    if cfg.defaults_only:
        print("no parameters given: all values are defaults")
    problems = validate_params(cfg.params)
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return EXIT_INVALID
    det = compute_detunings(cfg.params)
    print(f"Delta_c = {det.delta_c.real:.6g} {det.delta_c.imag:+.6g}i rad/s")
    print(f"Delta_m = {det.delta_m.real:.6g} {det.delta_m.imag:+.6g}i rad/s")
    print(f"Delta_mech = {det.delta_mech.real:.6g} {det.delta_mech.imag:+.6g}i rad/s")
    try:
        print(f"stiffness ratio = {stiffness_ratio(build_generator(cfg.params)):.6g}")
    except NotStiffError as exc:
        print(f"stiffness ratio: {exc}")
    grid = omega0_grid(cfg.params, cfg.sweep.n_omega0, cfg.sweep.omega0_span)
    for label, w in (("first", grid[0]), ("last", grid[-1])):
        p = cfg.params.replace(omega_drive=float(w))
        try:
            od = optimal_drive(p)
            print(f"{label} grid point omega0/2pi = {w / TWO_PI:.10g} Hz: "
                  f"phi* = {od.phi_star:.12g} rad, E*/2pi = {od.e_star / TWO_PI:.10g} Hz")
        except DegenerateDetuning as exc:
            print(f"{label} grid point omega0/2pi = {w / TWO_PI:.10g} Hz: {exc}")
    return EXIT_OK


def cmd_evolve(args, cfg: RunConfig) -> int:
    _require_valid(cfg)
    started = _now()
    t_end = args.t_end if args.t_end is not None else default_horizon(cfg.params)
    if not t_end > 0:
        raise UsageError("--t-end must be positive")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    output = Path(args.output) if args.output else Path(args.out) / "trajectory.csv"
    traj = radau_evolve(build_generator(cfg.params), vacuum_state(), t_end, cfg.integrator,
                        sample_every=t_end / args.samples)
    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, output)
    except OSError as exc:
        raise OutputError(output, exc) from exc
    write_manifest(output.with_name(output.stem + "_manifest.json"), cfg, sys.argv[1:], started, [output])
    print(f"wrote {output} ({len(traj.times)} samples, {traj.step_stats['accepted']} accepted steps)")
    return EXIT_OK


def cmd_optimal(args, cfg: RunConfig) -> int:
    """CSV rows (omega0_hz, phi_rad, E_hz, formula_gap) over the pump grid.

    formula_gap is the relative distance between the closed-form drive and
    the drive that minimises |C200| numerically; empty when undefined."""
    _require_valid(cfg)
    grid = omega0_grid(cfg.params, cfg.sweep.n_omega0, cfg.sweep.omega0_span)
    print("omega0_hz,phi_rad,E_hz,formula_gap")
    for w in grid:
        p = cfg.params.replace(omega_drive=float(w))
        det = compute_detunings(p)
        hz = f"{float(w) / TWO_PI:.17g}"
        try:
            od = optimal_drive(p, det)
        except DegenerateDetuning:
            print(f"{hz},,,")
            continue
        try:
            gap = f"{c200_root_check(p, det)[1]:.6e}"
        except ScanFailure:
            gap = ""
        print(f"{hz},{od.phi_star:.17g},{od.e_star / TWO_PI:.17g},{gap}")
    return EXIT_OK


def cmd_sweep1d(args, cfg: RunConfig) -> int:
    _require_valid(cfg)
    started = _now()
    recs = sweep_1d(spec_for(cfg, args.mode, args.workers))
    out = Path(args.out)
    path = write_text(out / f"sweep1d_{args.mode}.csv", records_csv(recs))
    write_manifest(out / f"sweep1d_{args.mode}_manifest.json", cfg, sys.argv[1:], started, [path])
    _report(recs, path)
    return EXIT_OK


def cmd_sweep2d(args, cfg: RunConfig) -> int:
    _require_valid(cfg)
    started = _now()
    grid = sweep_2d(spec_for(cfg, args.mode, args.workers, omega_m_grid=ratio_grid(cfg)))
    out = Path(args.out)
    flat = [r for row in grid for r in row]
    paths = [
        write_text(out / f"sweep2d_{args.mode}_records.csv", records_csv(flat)),
        write_text(out / f"sweep2d_{args.mode}_matrix.csv", matrix_csv(grid)),
    ]
    write_manifest(out / f"sweep2d_{args.mode}_manifest.json", cfg, sys.argv[1:], started, paths)
    _report(flat, paths[0])
    return EXIT_OK


def _report(recs, path) -> None:
    vals = [r.g2_avg for r in recs if not math.isnan(r.g2_avg)]
    errors = sum(1 for r in recs if r.error)
    best = f"{min(vals):.3e}" if vals else "undefined"
    print(f"wrote {path}: {len(recs)} points, min g2_avg {best}, {errors} failed points")


def cmd_figure(args, cfg: RunConfig) -> int:
    _require_valid(cfg)
    started = _now()
    out = Path(args.out)
    paths = run_figure(args.name, cfg, out, args.workers, args.svg)
    write_manifest(out / f"{args.name}_manifest.json", cfg, sys.argv[1:], started, paths)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON config (frequencies in Hz)")
    parser.add_argument("--out", default=argparse.SUPPRESS if suppress else ".", help="output directory")
    parser.add_argument("--workers", type=int, default=d, help=f"worker processes (overrides {WORKERS_ENV})")
    parser.add_argument("--svg", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="also write SVG plots")
    parser.add_argument("--seed-free", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="assert no randomness is used (always true)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magnoblock", description="Photon blockade in a feedback-driven "
                                     "cavity magnomechanical system.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate parameters and print derived quantities")
    _common(p, suppress=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("evolve", help="integrate from the vacuum and write a trajectory CSV")
    _common(p, suppress=True)
    p.add_argument("--t-end", type=float, default=None, help="seconds (default 20/kappa_c)")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--output", default=None, help="trajectory CSV path (default OUT/trajectory.csv)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("optimal", help="print the optimal feedback phase and drive")
    _common(p, suppress=True)
    p.set_defaults(func=cmd_optimal)

    for name, func in (("sweep1d", cmd_sweep1d), ("sweep2d", cmd_sweep2d)):
        p = sub.add_parser(name, help=f"{name[-2:].upper()} sweep over the pump frequency")
        _common(p, suppress=True)
        p.add_argument("--mode", choices=MODES, default="optimal-feedback")
        p.set_defaults(func=func)

    p = sub.add_parser("figure", help="reproduce one figure's data")
    _common(p, suppress=True)
    p.add_argument("name", choices=FIGURES)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.workers = resolve_workers(args.workers)
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _Invalid as exc:
        for p in exc.problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_INVALID
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (IntegrationError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
