#!/usr/bin/env python3
"""l4s toolkit - CLI entry point.

Usage:
    # Type-check a program
    python main.py check corpus/pc_fixed.l4s

    # Run one interleaving, write trace and graph files
    python main.py run corpus/pc_fixed.l4s --seed 1 --steps 200 -o out/

    # Enumerate every interleaving
    python main.py explore corpus/cv_two_waits.l4s --bound 60

    # Re-export or strengthen a graph dump, check the response-time bound
    python main.py graph out/graph.json --format dot
    python main.py analyze out/graph.json --thread a1 --procs 1,2,3,4

    # Random well-typed programs through the whole pipeline
    python main.py fuzz --count 100 --size small --seed 7
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from core.errors import ErrorCode, GraphError, L4sError, LoadError, MachineError, ParseError
from core.logging_config import configure_logging, get_logger
from core.renderer import get_renderer
from core.schemas import SCHEMA_VERSION, CliConfig, GraphDump
from orchestrator import L4sPipeline
from policies.script import parse_script

logger = get_logger(__name__)

# ==============================================================================
# CODES DE SORTIE
# ==============================================================================

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEADLOCK = 4
EXIT_STEP_LIMIT = 5
EXIT_RUNTIME = 6
EXIT_INTERRUPTED = 130

RUN_STATUS_EXIT = {
    "completed": EXIT_OK,
    "deadlock": EXIT_DEADLOCK,
    "step_limit": EXIT_STEP_LIMIT,
    "failure": EXIT_RUNTIME,
}

TRUTHY = {"1", "true", "yes", "always"}


def load_env(path: Path = Path(".env")) -> None:
    """KEY=VALUE par ligne; l'environnement existant garde la priorité."""
    if not path.exists():
        return
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#") and "=" in line:
            key, value = line.split("=", 1)
            os.environ.setdefault(key.strip(), value.strip())


class Style:
    """Couleurs ANSI, actives seulement avec L4S_COLOR."""

    def __init__(self, enabled: bool):
        self.enabled = enabled

    def _wrap(self, code: str, text: str) -> str:
        return f"\033[{code}m{text}\033[0m" if self.enabled else text

    def ok(self, text: str) -> str:
        return self._wrap("32", text)

    def bad(self, text: str) -> str:
        return self._wrap("31", text)

    def dim(self, text: str) -> str:
        return self._wrap("2", text)


# ==============================================================================
# ARGUMENTS
# ==============================================================================

def _procs(text: str) -> list[int]:
    try:
        return [int(p) for p in text.replace(" ", "").split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid processor list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l4s",
        description=f"l4s toolkit (schema {SCHEMA_VERSION})",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  l4s check corpus/pc_terr.l4s --format json
  l4s run corpus/pc_terr.l4s --unsafe --policy script --script a0,a0,a0,a0,a2
  l4s analyze out/graph.json --thread a2 --procs 1,2

Exit codes:
  0 ok              1 check failed / ill-formed / bound violated / fuzz failures
  2 parse or usage  3 IO error      4 deadlock      5 step limit
  6 dynamic type failure or runtime invariant violation
  130 interrupted
        """,
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only warnings and errors")

    sub = parser.add_subparsers(dest="subcommand", required=True)

    check = sub.add_parser("check", help="Type-check a program")
    check.add_argument("input", type=Path, metavar="FILE")
    check.add_argument("--format", dest="output_format", default="text")

    run = sub.add_parser("run", help="Run one interleaving")
    run.add_argument("input", type=Path, metavar="FILE")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--policy", default="random", help="random | rr | script")
    run.add_argument("--script", type=parse_script, default=[], help="Thread choices, e.g. a0,a0,a1")
    run.add_argument("--steps", type=int, default=10_000, help="Turn limit (default: 10000)")
    run.add_argument("--unsafe", action="store_true", help="Run without type-checking")
    run.add_argument("--may-deadlock", dest="may_deadlock", action="store_true", help="A deadlock exits with 0")
    run.add_argument("--signal", default="fifo", help="Waiter woken by signal: fifo | highest")
    run.add_argument("--output", "-o", dest="output_dir", type=Path, metavar="DIR")
    run.add_argument("--format", dest="output_format", default="text")

    explore = sub.add_parser("explore", help="Enumerate all interleavings")
    explore.add_argument("input", type=Path, metavar="FILE")
    explore.add_argument("--bound", type=int, default=200, help="Turn bound per interleaving")
    explore.add_argument("--unsafe", action="store_true")
    explore.add_argument("--signal", default="fifo")
    explore.add_argument("--output", "-o", dest="output_dir", type=Path, metavar="DIR")
    explore.add_argument("--format", dest="output_format", default="text")

    graph = sub.add_parser("graph", help="Export a graph dump")
    graph.add_argument("input", type=Path, metavar="GRAPH_JSON")
    graph.add_argument("--format", dest="output_format", default="dot")
    graph.add_argument("--strengthen", metavar="THREAD")

    analyze = sub.add_parser("analyze", help="Check the response-time bound")
    analyze.add_argument("input", type=Path, metavar="GRAPH_JSON")
    analyze.add_argument("--thread", required=True)
    analyze.add_argument("--procs", type=_procs, default=[1, 2, 3, 4], help="Comma-separated (default: 1,2,3,4)")
    analyze.add_argument("--samples", type=int, default=20)
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--format", dest="output_format", default="text")

    fuzz = sub.add_parser("fuzz", help="Fuzz the pipeline with generated programs")
    fuzz.add_argument("--count", type=int, default=100)
    fuzz.add_argument("--size", default="small", help="small | medium")
    fuzz.add_argument("--seed", type=int, default=0)
    fuzz.add_argument("--runs", type=int, default=3, help="Seeds per program")
    fuzz.add_argument("--samples", type=int, default=20)
    fuzz.add_argument("--output", "-o", dest="output_dir", type=Path, metavar="DIR")
    fuzz.add_argument("--format", dest="output_format", default="text")

    return parser


def build_config(args: argparse.Namespace) -> CliConfig:
    """
    Raises:
        pydantic.ValidationError: combinaison d'options invalide
    """
    values = {k: v for k, v in vars(args).items() if v is not None and k not in ("verbose", "quiet")}
    values["color"] = os.environ.get("L4S_COLOR", "").strip().lower() in TRUTHY
    return CliConfig.model_validate(values)


# ==============================================================================
# COMMANDES
# ==============================================================================

def cmd_check(config: CliConfig, pipeline: L4sPipeline, style: Style) -> int:
    program = pipeline.load(config.input)
    report = pipeline.check(program, name=str(config.input))
    if config.output_format == "json":
        print(report.to_json())
    elif report.ok:
        print(f"{config.input}: {style.ok('ok')}")
    else:
        for d in report.errors:
            where = f"{d.span.line}:{d.span.column}" if d.span else "?"
            print(f"{config.input}:{where}: {style.bad(d.kind)}: {d.message}")
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_run(config: CliConfig, pipeline: L4sPipeline, style: Style) -> int:
    program = pipeline.load(config.input)
    if not config.unsafe:
        report = pipeline.check(program, name=str(config.input))
        if not report.ok:
            for d in report.errors:
                logger.error(f"{d.kind}: {d.message}")
            logger.error("Program is ill-typed; use --unsafe to run it anyway")
            return EXIT_FAILED

    outcome = pipeline.run(
        program,
        name=str(config.input),
        policy=config.policy,
        seed=config.seed,
        script=config.script,
        steps=config.steps,
        unsafe=config.unsafe,
    )
    summary = outcome.summary
    if config.output_dir:
        paths = outcome.save(config.output_dir)
        logger.info(f"Saved: {', '.join(str(p) for p in paths.values())}")

    if config.output_format == "json":
        print(summary.to_json())
    else:
        status = style.ok(summary.status) if summary.status == "completed" else style.bad(summary.status)
        counts = ", ".join(f"{k}={v}" for k, v in summary.graph.items())
        print(f"{config.input}: {status} after {summary.steps} turn(s) [{counts}]")
        if summary.well_formed is not None:
            print(f"  well-formed: {style.ok('yes') if summary.well_formed else style.bad('no')}")
        if summary.violation:
            print(f"  violation: {summary.violation['kind']} in {summary.violation['thread']}")
        if summary.deadlock:
            print(f"  cycle: {' -> '.join(summary.deadlock.cycle) or '-'}")
            for key, names in {**summary.deadlock.mutex_waiters, **summary.deadlock.cv_waiters}.items():
                print(f"  blocked on {key}: {', '.join(names)}")
        if summary.failure:
            print(f"  failure: {summary.failure}")

    code = RUN_STATUS_EXIT[summary.status]
    if summary.status == "deadlock" and config.may_deadlock:
        code = EXIT_OK
    if code == EXIT_OK and summary.well_formed is False:
        code = EXIT_FAILED
    return code


def cmd_explore(config: CliConfig, pipeline: L4sPipeline, style: Style) -> int:
    program = pipeline.load(config.input)
    if not config.unsafe:
        report = pipeline.check(program, name=str(config.input))
        if not report.ok:
            logger.error("Program is ill-typed; use --unsafe to explore it anyway")
            return EXIT_FAILED

    outcome = pipeline.explore(program, name=str(config.input), bound=config.bound, unsafe=config.unsafe)
    summary = outcome.summary
    if config.output_dir:
        outcome.save(config.output_dir)
    if config.output_format == "json":
        print(summary.to_json())
    else:
        statuses = ", ".join(f"{k}={v}" for k, v in sorted(summary.statuses.items()))
        print(f"{config.input}: {summary.runs} run(s), {summary.distinct_graphs} distinct graph(s) [{statuses}]")
        if summary.truncated:
            print(style.dim(f"  truncated at bound {config.bound}"))
        if summary.ill_formed:
            print(f"  ill-formed: {style.bad(str(summary.ill_formed))}")

    if summary.statuses.get("failure"):
        return EXIT_RUNTIME
    return EXIT_FAILED if summary.ill_formed else EXIT_OK


def cmd_graph(config: CliConfig, pipeline: L4sPipeline, style: Style) -> int:
    g = pipeline.graph(pipeline.load_graph(config.input), config.strengthen)
    if config.output_format == "json":
        print(GraphDump.from_graph(g).to_json())
    else:
        sys.stdout.write(get_renderer().render_dot(g))
    return EXIT_OK


def cmd_analyze(config: CliConfig, pipeline: L4sPipeline, style: Style) -> int:
    g = pipeline.load_graph(config.input)
    report = pipeline.analyze(g, config.thread, procs=config.procs, samples=config.samples, seed=config.seed)
    if config.output_format == "json":
        print(report.to_json())
    elif not report.well_formed:
        v = report.violation
        print(f"{style.bad('ill-formed')}: {v['kind']} in thread {v['thread']} at vertex {v['vertex']}")
        print(f"  witness: {' -> '.join(str(u) for u in v['witness'])}")
    else:
        for r in report.reports:
            verdict = style.ok("ok") if r.satisfied else style.bad("VIOLATED")
            print(
                f"P={r.processors} responseTime={r.response_time} competitorWork={r.competitor_work} "
                f"aSpan={r.a_span} bound={r.bound} {verdict}"
            )
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_fuzz(config: CliConfig, pipeline: L4sPipeline, style: Style) -> int:
    outcome = pipeline.fuzz(
        seed=config.seed,
        count=config.count,
        size=config.size,
        runs=config.runs,
        output_dir=config.output_dir,
        samples=config.samples,
    )
    summary = outcome.summary
    if config.output_dir:
        outcome.save(config.output_dir)
    if config.output_format == "json":
        print(summary.to_json())
    else:
        verdict = style.ok("0 failures") if not summary.failures else style.bad(f"{len(summary.failures)} failure(s)")
        print(f"fuzz seed={summary.seed} count={summary.count} size={summary.size}: {verdict}")
        print(f"  accepted: {summary.accepted}/{summary.count}")
        print(f"  deadlocked runs: {summary.deadlocks} ({summary.deadlock_rate:.0%})")
        print(f"  mutants rejected: {summary.mutants_rejected}/{summary.mutants} ({summary.rejection_rate:.0%})")
        for f in summary.failures:
            print(f"  #{f.index} seed={f.seed}: {f.reason} -> {f.reproducer}")
    return EXIT_OK if summary.ok else EXIT_FAILED


COMMANDS = {
    "check": cmd_check,
    "run": cmd_run,
    "explore": cmd_explore,
    "graph": cmd_graph,
    "analyze": cmd_analyze,
    "fuzz": cmd_fuzz,
}


def exit_code_for(error: L4sError) -> int:
    """Code de sortie stable par famille d'erreur."""
    if isinstance(error, ParseError):
        return EXIT_USAGE
    if isinstance(error, LoadError):
        return EXIT_IO
    if isinstance(error, GraphError) and error.code is ErrorCode.UNKNOWN_THREAD:
        return EXIT_USAGE
    if isinstance(error, MachineError):
        if error.code in (ErrorCode.THREAD_NOT_ENABLED, ErrorCode.INVALID_POLICY):
            return EXIT_USAGE
        return EXIT_RUNTIME
    return EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    """Main entry point.

    Returns:
        Exit code (voir EXIT_*)
    """
    load_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    else:
        level = logging.getLevelName(os.environ.get("L4S_LOG_LEVEL", "WARNING").upper())
        if not isinstance(level, int):
            level = logging.WARNING
    configure_logging(level=level, format_style="simple")

    try:
        config = build_config(args)
    except ValidationError as e:
        for err in e.errors():
            logger.error(f"Invalid options: {err['msg']}")
        return EXIT_USAGE

    logger.debug(f"Schema version: {SCHEMA_VERSION}, config: {config.model_dump(exclude_none=True)}")
    pipeline = L4sPipeline(signal_mode=config.signal)
    style = Style(config.color)

    try:
        return COMMANDS[config.subcommand](config, pipeline, style)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except ParseError as e:
        print(e.diagnostic(str(config.input)), file=sys.stderr)
        return EXIT_USAGE
    except L4sError as e:
        logger.error(str(e))
        if config.output_format == "json":
            print(json.dumps({"error": e.report()}, indent=2, default=str))
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
