import argparse
import logging
import sys
from typing import List, Optional, TextIO, Tuple

from domain.exceptions import AnalyzerError
from dto.analysis_dto import AnalysisOptions
from logging_config import configure_logging
from repository.exceptions import RepositoryError
from repository.hardware_repository import HardwareRepository
from repository.source_repository import SourceRepository
from service.analysis_service import AnalysisService
from service.report_renderer import FORMATS, render_report


logger = logging.getLogger(__name__)

EXIT_CLEAN = 0
EXIT_WARNINGS = 1
EXIT_USAGE = 2


def source_position(text: str) -> Tuple[int, Optional[int]]:
    """`LINE` or `LINE:COLUMN` as given to --dump-state and --explain-wf."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return int(parts[0]), None
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected LINE or LINE:COLUMN, got '{text}'")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", help="Mini-C translation unit")
    parser.add_argument("--hw", required=True, help="hardware description file, or 'none' for the agnostic mode")
    parser.add_argument("--isr", action="append", default=[], metavar="NAME",
                        help="ISR function to analyze (hardware-agnostic mode); repeatable")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analyzer",
        description="Static analyzer for lockless, interrupt-driven Mini-C programs",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="analyze a program and report findings")
    _common(analyze)
    analyze.add_argument("--format", default="text", choices=FORMATS)
    dumps = analyze.add_mutually_exclusive_group()
    dumps.add_argument("--dump-cfg", action="store_true", help="print the CFG of every function as DOT")
    dumps.add_argument("--dump-state", type=source_position, metavar="LINE[:COL]",
                       help="print the abstract state before the nodes at a source position")
    dumps.add_argument("--dump-access-sets", action="store_true", help="print read/write and shared sets")
    dumps.add_argument("--explain-wf", type=source_position, metavar="LINE[:COL]",
                       help="print the well-formedness derivation of a full expression")
    analyze.add_argument("--context-depth", type=int, help="call-string length (default from ANALYZER_CONTEXT_DEPTH)")
    analyze.add_argument("--widening-delay", type=int, help="joins before widening at loop heads")
    analyze.add_argument("--max-visits", type=int, help="node-visit budget of the fixed point")
    analyze.add_argument("--dump-stats", action="store_true", help="append analysis statistics to text output")

    oracle = commands.add_parser("oracle", help="enumerate concrete executions and print value sets")
    _common(oracle)
    oracle.add_argument("--isr-max", type=int, default=2, help="most ISR executions per trace")
    oracle.add_argument("--check", action="store_true",
                        help="also check that the analysis contains every concrete value")
    return parser


def _options(args: argparse.Namespace) -> AnalysisOptions:
    overrides = {
        key: getattr(args, key, None) for key in ("context_depth", "widening_delay", "max_visits")
    }
    return AnalysisOptions().merged(**overrides)


def run_analyze(args: argparse.Namespace, service: AnalysisService, out: TextIO) -> int:
    run = service.analyze_file(args.file, args.hw, args.isr, _options(args))
    lines: Optional[List[str]] = None
    if args.dump_cfg:
        out.write(service.dump_cfg(run))
        return EXIT_CLEAN
    if args.dump_access_sets:
        lines = service.dump_access_sets(run)
    elif args.dump_state is not None:
        lines = service.dump_state(run, *args.dump_state)
    elif args.explain_wf is not None:
        lines = service.explain_wf(run, *args.explain_wf)
    if lines is not None:
        out.write("\n".join(lines) + "\n")
        return EXIT_CLEAN
    out.write(render_report(run.report, args.format, args.dump_stats))
    return run.report.exit_code


def run_oracle(args: argparse.Namespace, service: AnalysisService, out: TextIO) -> int:
    run = service.analyze_file(args.file, args.hw, args.isr)
    executions = service.enumerate(run, service.oracle_bounds(args.isr_max))
    out.write("\n".join(service.describe_executions(run, executions)) + "\n")
    out.write(f"{executions.states_explored} configurations explored\n")
    if not args.check:
        return EXIT_CLEAN
    report = service.check_containment(run, executions)
    for violation in report.violations:
        out.write(f"{violation}\n")
        for step in violation.trace:
            out.write(f"    {step}\n")
    out.write(f"containment: {report.checked} observations, {len(report.violations)} violations\n")
    return EXIT_CLEAN if report.holds else EXIT_WARNINGS


def main(argv: Optional[List[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    """Command line entry point; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_CLEAN

    configure_logging(args.log_level, stream=err)
    service = AnalysisService(SourceRepository(), HardwareRepository())
    try:
        if args.command == "oracle":
            return run_oracle(args, service, out)
        return run_analyze(args, service, out)
    except (AnalyzerError, RepositoryError) as e:
        logger.error(f"analysis failed: {e}")
        err.write(f"error: {e}\n")
        return EXIT_USAGE
    except ValueError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE
