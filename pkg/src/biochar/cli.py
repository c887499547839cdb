"""Command-line interface.

Exit codes: 0 success, 2 invalid parameters or arguments, 3 integration
failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .export import ExportError, export_csv, export_svg, format_jsonl, format_text, report_equilibria
from .integrator import IntegrationError
from .kinetics import biochar_mechanism, validate_params
from .nondim import parse_config, parse_override
from .parser import print_mechanism
from .scenarios import ParameterError, Scenario, builtin_scenario, sensitivity_k2, sensitivity_u3, run_scenario

log = logging.getLogger("biochar")

EXIT_OK, EXIT_VALIDATION, EXIT_INTEGRATION, EXIT_IO = 0, 2, 3, 4
FORMATS = ("csv", "svg")


class UsageError(ValueError):
    pass


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in items if f not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a comma list from {FORMATS}, got {text!r}")
    return items


def _sweep(text: str) -> tuple[str, float]:
    kind, _, value = text.partition(":")
    if kind not in ("u3", "k2") or not value:
        raise argparse.ArgumentTypeError(f"sweep must be u3:FACTOR or k2:VALUE, got {text!r}")
    try:
        return kind, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"sweep value {value!r} is not a number") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biochar", description="Charcoal-in-soil CO2 kinetics toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, sets=(1, 2, 3)):
        p.add_argument("--set", type=int, choices=sets, required=True, dest="set_number")
        p.add_argument("--config", type=Path, help="flat key = value parameter file")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VAL")

    def output_args(p):
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: $BIOCHAR_OUT or ./biochar-out)")
        p.add_argument("--format", type=_formats, default=FORMATS, dest="formats")

    sim = sub.add_parser("simulate", help="run a parameter set with and without charcoal")
    scenario_args(sim)
    sim.add_argument("--t-end", type=float, default=None)
    output_args(sim)

    eq = sub.add_parser("equilibria", help="report equilibria and stability")
    scenario_args(eq)
    eq.add_argument("--text", action="store_true", help="human-readable report instead of JSON lines")

    sens = sub.add_parser("sensitivity", help="rerun a parameter set with more charcoal or a slower breakdown")
    scenario_args(sens, sets=(1, 2, 3))
    sens.add_argument("--sweep", type=_sweep, required=True, metavar="u3:FACTOR|k2:VALUE")
    sens.add_argument("--t-end", type=float, default=None)
    output_args(sens)

    mech = sub.add_parser("mechanism", help="mechanism utilities")
    mech_sub = mech.add_subparsers(dest="mechanism_command", required=True)
    mprint = mech_sub.add_parser("print", help="print the reaction mechanism in .rxn format")
    scenario_args(mprint)
    return parser


def _scenario(args) -> Scenario:
    sc = builtin_scenario(args.set_number, getattr(args, "t_end", None))
    settings = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ExportError(args.config, exc) from exc
        try:
            settings.update(parse_config(text))
        except ValueError as exc:
            raise UsageError(f"{args.config}: {exc}") from exc
    for item in args.override:
        try:
            key, value = parse_override(item)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        settings[key] = value
    sc = sc.with_overrides(settings)
    try:
        problems = validate_params(sc.params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if problems:
        raise ParameterError(problems)
    return sc


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get("BIOCHAR_OUT", "biochar-out"))


def _write(result, args) -> None:
    out = _out_dir(args)
    stem = result.scenario.tag
    for fmt in args.formats:
        path = out / f"{stem}.{fmt}"
        (export_csv if fmt == "csv" else export_svg)(result, path)
        print(path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "simulate":
            result = run_scenario(_scenario(args))
            log.info("with charcoal: %s", result.with_charcoal.monitors)
            log.info("baseline: %s", result.baseline.monitors)
            _write(result, args)
        elif args.command == "equilibria":
            records = report_equilibria(_scenario(args))
            sys.stdout.write(format_text(records) if args.text else format_jsonl(records))
        elif args.command == "sensitivity":
            kind, value = args.sweep
            sc = _scenario(args)
            try:
                result = sensitivity_u3(sc, value) if kind == "u3" else sensitivity_k2(sc, value)
            except ValueError as exc:
                if isinstance(exc, ParameterError):
                    raise
                raise UsageError(str(exc)) from exc
            _write(result, args)
        elif args.command == "mechanism":
            sys.stdout.write(print_mechanism(biochar_mechanism(_scenario(args).params)))
    except (ParameterError, UsageError) as exc:
        print(f"biochar: {exc}", file=sys.stderr)
        if isinstance(exc, ParameterError):
            for problem in exc.problems:
                print(f"  violated: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except IntegrationError as exc:
        print(f"biochar: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"biochar: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
