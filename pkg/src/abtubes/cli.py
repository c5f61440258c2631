"""Command-line entry point.

Exit codes: 0 success, 1 invalid config or I/O failure, 2 numerical failure,
3 audit or probe failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import probes, scenarios
from .config import (
    MODES,
    ConfigurationError,
    RunConfig,
    config_from_dict,
    dumps_config,
    example_config,
    load_config,
)
from .errors import (
    AuditFailure,
    ConfinementFailureError,
    ModelViolationError,
    NumericalBlowupError,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_AUDIT = 3

OUTPUT_DIR_ENV = "ABTUBES_OUTPUT_DIR"

FRINGE_HEADER = ("x", "intensity_off", "intensity_on")
SWEEP_HEADER = ("v0", "delta_phi_measured", "delta_phi_analytic", "fringe_shift_periods")


def fmt(value: float) -> str:
    return format(value, ".17g")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_report(path: Path, report: scenarios.SimulationReport, audit=None) -> None:
    data = report.to_dict()
    if audit is not None:
        data["energy_audit"] = {
            "passed": audit.passed,
            "rule": audit.rule,
            "expected_gap": audit.expected_gap,
            "measured_gap": audit.measured_gap,
            "tolerance": audit.tolerance,
        }
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def info(self, msg: str) -> None:
        if not self.quiet:
            print(msg)

    def error(self, msg: str) -> None:
        print(f"error: {msg}", file=sys.stderr)


def _prepare(args, console) -> tuple[RunConfig, Path] | None:
    try:
        cfg = load_config(args.config)
        if args.dt_override is not None:
            cfg = cfg.with_updates(evolution={"dt": args.dt_override})
    except ConfigurationError as exc:
        console.error(str(exc))
        return None
    out_dir = args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or cfg.output.directory
    return cfg, Path(out_dir)


def _make_dir(path: Path, console) -> bool:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        console.error(f"cannot create output directory {path}: {exc.strerror}")
        return False
    return True


def run_command(cfg: RunConfig, out_dir: Path, console=None) -> int:
    console = console or _Console(quiet=True)
    try:
        report = scenarios.run(cfg, external_on=True)
    except NumericalBlowupError as exc:
        console.error(f"numerical blowup at step {exc.step_index}")
        return EXIT_NUMERICAL
    except (ModelViolationError, ConfinementFailureError) as exc:
        console.error(str(exc))
        return EXIT_NUMERICAL
    except ConfigurationError as exc:
        console.error(str(exc))
        return EXIT_INVALID

    audit, status = None, EXIT_OK
    try:
        audit = scenarios.energy_audit(report, cfg)
    except AuditFailure as exc:
        console.error(str(exc))
        status = EXIT_AUDIT

    if not _make_dir(out_dir, console):
        return EXIT_INVALID
    try:
        write_report(out_dir / cfg.output.report, report, audit)
        rows = zip(report.fringe_x, report.intensity_off, report.intensity_on)
        write_csv(out_dir / cfg.output.fringes, FRINGE_HEADER, rows)
    except OSError as exc:
        console.error(f"cannot write output: {exc}")
        return EXIT_INVALID

    console.info(f"mode                 {report.mode}")
    console.info(f"measured delta_phi   {report.measured_delta_phi:.12g}")
    console.info(f"analytic delta_phi   {report.analytic_delta_phi:.12g}")
    console.info(f"difference           {report.measured_delta_phi - report.analytic_delta_phi:.3g}")
    console.info(f"deviation_sup        {report.deviation_sup:.3g}")
    console.info(f"fringe shift         {report.fringe_shift_periods:.6f} periods")
    console.info(f"e1, e2 (mid-pulse)   {report.e1:.12g}, {report.e2:.12g}")
    console.info(f"wrote {out_dir / cfg.output.report} and {out_dir / cfg.output.fringes}")
    return status


def sweep_command(cfg: RunConfig, out_dir: Path, console=None) -> int:
    console = console or _Console(quiet=True)
    if not cfg.sweep.v0_values:
        console.error("sweep.v0_values: at least one voltage required")
        return EXIT_INVALID
    try:
        rows = scenarios.sweep_voltage(cfg, cfg.sweep.v0_values, workers=int(cfg.sweep.workers))
    except NumericalBlowupError as exc:
        console.error(f"numerical blowup at step {exc.step_index}")
        return EXIT_NUMERICAL
    except (ModelViolationError, ConfinementFailureError) as exc:
        console.error(str(exc))
        return EXIT_NUMERICAL
    if not _make_dir(out_dir, console):
        return EXIT_INVALID
    try:
        write_csv(
            out_dir / cfg.output.sweep,
            SWEEP_HEADER,
            [(r.v0, r.delta_phi_measured, r.delta_phi_analytic, r.fringe_shift_periods) for r in rows],
        )
    except OSError as exc:
        console.error(f"cannot write output: {exc}")
        return EXIT_INVALID
    console.info(f"{'v0':>12} {'measured':>14} {'analytic':>14} {'shift':>10}")
    for r in rows:
        console.info(f"{r.v0:12.6g} {r.delta_phi_measured:14.10g} {r.delta_phi_analytic:14.10g} {r.fringe_shift_periods:10.6f}")
    failures = scenarios.check_sweep(rows, cfg)
    for msg in failures:
        console.error(msg)
    return EXIT_AUDIT if failures else EXIT_OK


def validate_command(cfg: RunConfig, console=None) -> int:
    console = console or _Console(quiet=True)
    results = probes.run_probes(cfg.make_schedule(), cfg.charges.q, cfg.evolution.dt)
    console.info(f"{'probe':<20} {'value':>12}  {'criterion':<32} result")
    for r in results:
        console.info(f"{r.name:<20} {r.value:12.4g}  {r.criterion:<32} {'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_AUDIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abtubes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--output-dir", help=f"output directory (overrides ${OUTPUT_DIR_ENV} and the config)")
        p.add_argument("--quiet", action="store_true", help="only print errors")
        p.add_argument("--dt-override", type=float, help="replace evolution.dt")

    common(sub.add_parser("run", help="simulate one configuration and write report + fringe CSV"))
    common(sub.add_parser("sweep", help="run every voltage in sweep.v0_values and write the sweep CSV"))
    common(sub.add_parser("validate", help="run propagator self-checks on a reduced grid"))
    emit = sub.add_parser("emit-example-config", help="print a complete default config")
    emit.add_argument("mode", choices=MODES)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "emit-example-config":
        sys.stdout.write(dumps_config(config_from_dict(example_config(args.mode))))
        return EXIT_OK
    console = _Console(args.quiet)
    prepared = _prepare(args, console)
    if prepared is None:
        return EXIT_INVALID
    cfg, out_dir = prepared
    if args.command == "run":
        return run_command(cfg, out_dir, console)
    if args.command == "sweep":
        return sweep_command(cfg, out_dir, console)
    return validate_command(cfg, console)


if __name__ == "__main__":
    sys.exit(main())
