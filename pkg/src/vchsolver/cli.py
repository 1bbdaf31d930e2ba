"""Command-line entry point ``vch``.

Exit codes: 0 success, 1 verdict failure or aborted integration, 2 bad
configuration or input.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import diagnostics, experiments, storage
from .config import ConfigError, RunConfig, parse_config
from .galerkin import PhysicsSpec, SolverConfig, SolverState, integrate
from .physics import MobilitySpec, QuarticWell

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("vchsolver")


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"override {pair!r} must look like section.key=value")
        out[key.strip()] = value.strip()
    return out


def _load(args) -> RunConfig:
    cfg = parse_config(args.config, _overrides(args.set))
    if getattr(args, "out", None):
        cfg = replace(cfg, output_dir=Path(args.out))
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    u0 = cfg.plan.initial_field(cfg.solver.basis)
    traj = integrate(u0, cfg.solver, cfg.sample_every)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    storage.write_records(out / "trajectory.csv", traj.records)
    for i, state in enumerate(traj.states):
        storage.write_snapshot(state.c, state.t, out / f"snapshot_{i:05d}.vchf")
    print(f"wrote {len(traj.records)} samples to {out}")
    if not traj.complete:
        print(f"integration aborted: {traj.error}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    report = experiments.theta_sweep(cfg.plan)
    try:
        text = experiments.sweep_verdict(report).format()
    except experiments.PreconditionError as exc:
        text = f"verdict: not evaluated ({exc})"
    text += "\n" + experiments.describe_gaps(report)
    storage.write_report(report, cfg.output_dir, text)
    print(text)
    return EXIT_OK if report.complete else EXIT_FAIL


def cmd_refine(args) -> int:
    cfg = _load(args)
    report = experiments.n_refinement(cfg.plan)
    verdict = experiments.refinement_verdict(report)
    text = verdict.format()
    storage.write_report(report, cfg.output_dir, text)
    print(text)
    return EXIT_OK if report.complete else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        report = storage.load_report(args.report_dir)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if report.kind == "refine":
            verdict = experiments.refinement_verdict(report)
        else:
            verdict = experiments.sweep_verdict(report)
    except experiments.PreconditionError as exc:
        print(f"verdict: FAIL (precondition: {exc})")
        return EXIT_FAIL
    print(verdict.format())
    if report.kind != "refine":
        print(experiments.describe_gaps(report))
    return EXIT_OK if verdict.holds else EXIT_FAIL


def cmd_diagnose(args) -> int:
    padding = 1.5
    if args.config:
        cfg = parse_config(args.config, _overrides(args.set))
        solver = cfg.solver
        padding = solver.basis.grid_points / solver.basis.n_modes
    else:
        solver = None
    try:
        c, t = storage.read_snapshot(args.snapshot, padding)
    except OSError as exc:
        print(f"error: cannot read {args.snapshot}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except storage.SnapshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if solver is None:
        solver = SolverConfig(1.0, 1.0, PhysicsSpec(QuarticWell(), MobilitySpec()), c.basis, 1e-3, 0.0)
    else:
        solver = replace(solver, basis=c.basis)
    rec = diagnostics.record(SolverState(t, c), solver)
    print(",".join(rec.columns()))
    print(",".join(repr(float(x)) for x in rec.as_row()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vch", description="Viscous Cahn-Hilliard solver with degenerate mobility")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.set_defaults(func=func)
        return p

    with_config("run", cmd_run, "integrate one trajectory")
    with_config("sweep", cmd_sweep, "cutoff-level sweep toward the degenerate limit")
    with_config("refine", cmd_refine, "Galerkin truncation refinement")
    p = sub.add_parser("verify", help="check a report directory")
    p.add_argument("report_dir")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("diagnose", help="diagnostics of one snapshot")
    p.add_argument("snapshot")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[])
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
