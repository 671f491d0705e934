"""Command line front end.

Exit codes: 0 when every check passes (findings allowed), 1 when any check
fails, 2 on usage, parse or schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .errors import ParseError, SchemaError
from .generators import list_generators
from .scenario import SCHEMA_VERSION, Scenario, load_scenario, parse_scenario
from .suite import render_report, run_suite

__all__ = ["main", "default_scenarios", "run_battery_report", "dump_report"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def default_scenarios() -> list[Scenario]:
    """The built-in ``verify`` battery, in file-name order."""
    folder = resources.files("tertiary_cs") / "scenarios"
    entries = sorted((e for e in folder.iterdir() if e.name.endswith(".json")), key=lambda e: e.name)
    out = []
    for entry in entries:
        text = entry.read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(entry.name, exc.lineno, exc.colno, exc.msg) from exc
        out.append(parse_scenario(data))
    return out


def run_battery_report(
    scenarios: list[Scenario], tol_scale: float = 1.0, seed: int | None = None, timing: bool = False
) -> dict:
    reports = []
    for sc in scenarios:
        if seed is not None:
            sc = sc.with_seed(seed)
        reports.append(run_suite(sc, tol_scale=tol_scale, timing=timing))
    statuses = [r["status"] for r in reports]
    status = "fail" if "fail" in statuses else ("finding" if "finding" in statuses else "pass")
    return {
        "schema": SCHEMA_VERSION,
        "engine": f"tertiary_cs {__version__}",
        "status": status,
        "reports": reports,
    }


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _emit(report: dict, out: str | None) -> None:
    text = dump_report(report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _exit_code(report: dict) -> int:
    return EXIT_FAIL if report["status"] == "fail" else EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-scale", type=float, default=1.0, help="Multiply every tolerance.")
    p.add_argument("--seed", type=int, default=None, help="Override the scenario seed.")
    p.add_argument("--out", default=None, help="Write the JSON report here instead of stdout.")
    p.add_argument(
        "--timing", action="store_true", help="Record runtime_ms (reports stop being byte-stable)."
    )
    p.add_argument("--summary", action="store_true", help="Print the rendered report to stderr.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tertiary-cs", description="Check Chern-Simons and tertiary character identities."
    )
    parser.add_argument("--version", action="version", version=f"tertiary_cs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one scenario file.")
    run.add_argument("file")
    _add_run_flags(run)

    verify = sub.add_parser("verify", help="Run the built-in scenario battery.")
    _add_run_flags(verify)

    sub.add_parser("list-generators", help="Print the generator registry as JSON.")

    render = sub.add_parser("render", help="Render a JSON report as text.")
    render.add_argument("report")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-generators":
            sys.stdout.write(json.dumps(list_generators(), indent=2) + "\n")
            return EXIT_OK
        if args.command == "render":
            path = Path(args.report)
            try:
                report = json.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ParseError(str(path), 0, 0, str(exc)) from exc
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), exc.lineno, exc.colno, exc.msg) from exc
            if not isinstance(report, dict) or "checks" not in report and "reports" not in report:
                raise SchemaError("<root>", "not a suite report")
            sys.stdout.write(render_report(report))
            return EXIT_OK
        if not args.tol_scale > 0:
            raise SchemaError("--tol-scale", "must be > 0")
        if args.command == "run":
            sc = load_scenario(args.file)
            if args.seed is not None:
                sc = sc.with_seed(args.seed)
            report = run_suite(sc, tol_scale=args.tol_scale, timing=args.timing)
        else:
            report = run_battery_report(default_scenarios(), args.tol_scale, args.seed, args.timing)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, args.out)
    if args.summary:
        sys.stderr.write(render_report(report))
    return _exit_code(report)


if __name__ == "__main__":
    raise SystemExit(main())
