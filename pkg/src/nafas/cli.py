"""Command-line entry point: ``nafas {start,list,info,plan,stats,version}``."""

from __future__ import annotations

import argparse
import contextlib
import datetime as dt
import io
import json
import os
import queue
import signal
import sys
import threading
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Mapping, Sequence, TextIO

from nafas import __version__
from nafas.catalog import Catalog, CatalogError, Level, UnknownLevel, UnknownProgram, format_centis
from nafas.config import ConfigError, Settings, parse_prep_seconds, resolve_settings
from nafas.engine import Aborted, ClockFailure, Command, MonotonicClock, SessionResult, TraceWriter, fanout, run_session
from nafas.history import HistoryRecord, HistoryStore, compute_stats, format_ts, seconds_from_ms
from nafas.planner import cycle_ms, plan_for
from nafas.tui import KeyListener, NotATTY, cbreak, format_mmss, select_program, session_view_loop, supports_unicode

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_ABORTED = 3

SUBCOMMANDS = ("start", "list", "info", "plan", "stats", "version")


class UsageError(Exception):
    def __init__(self, token: str, message: str | None = None):
        super().__init__(message or f"invalid argument: {token}")
        self.token = token


@dataclass(frozen=True)
class Invocation:
    subcommand: str
    program_id: str | None = None
    level: Level | None = None
    prep_seconds: Decimal | None = None
    silent: bool | None = None
    json: bool = False
    programs_path: str | None = None
    history_path: str | None = None
    no_color: bool = False
    ascii: bool | None = None
    trace_path: str | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message.rsplit(": ", 1)[-1], message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--program", dest="program_opt", metavar="ID")
    common.add_argument("--level", help="beginner|medium|advanced (or b/m/a)")
    common.add_argument("--prep", dest="prep_seconds", metavar="SECONDS", help="preparation time")
    common.add_argument("--silent", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--ascii", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--no-color", action="store_true")
    common.add_argument("--json", action="store_true")
    common.add_argument("--programs", dest="programs_path", metavar="PATH")
    common.add_argument("--history", dest="history_path", metavar="PATH")
    common.add_argument("--trace", dest="trace_path", metavar="PATH")

    parser = _Parser(prog="nafas", description="Guided breathing exercises in the terminal.")
    sub = parser.add_subparsers(dest="subcommand", metavar="COMMAND")
    sub.add_parser("start", parents=[common], help="run a breathing session")
    sub.add_parser("list", parents=[common], help="list programs")
    info = sub.add_parser("info", parents=[common], help="show one program in full")
    info.add_argument("program", nargs="?")
    plan = sub.add_parser("plan", parents=[common], help="print the expanded session plan as JSON")
    plan.add_argument("program", nargs="?")
    sub.add_parser("stats", parents=[common], help="summarize session history")
    sub.add_parser("version", help="print the version")
    return parser


def parse_args(argv: Sequence[str]) -> Invocation:
    parser = build_parser()
    args, extra = parser.parse_known_args(list(argv))
    if extra:
        raise UsageError(extra[0], f"unrecognized argument: {extra[0]}")
    if not args.subcommand:
        raise UsageError("", "missing command (one of: " + ", ".join(SUBCOMMANDS) + ")")
    if args.subcommand == "version":
        return Invocation("version")

    level = None
    if args.level is not None:
        try:
            level = Level.parse(args.level)
        except UnknownLevel:
            raise UsageError(args.level, f"unknown level: {args.level}") from None
    prep = None
    if args.prep_seconds is not None:
        try:
            prep = parse_prep_seconds(args.prep_seconds, "--prep")
        except ConfigError as exc:
            raise UsageError(args.prep_seconds, str(exc)) from None

    program = getattr(args, "program", None)
    if program and args.program_opt and program != args.program_opt:
        raise UsageError(program, "program given twice")
    return Invocation(
        subcommand=args.subcommand,
        program_id=program or args.program_opt,
        level=level,
        prep_seconds=prep,
        silent=args.silent,
        json=args.json,
        programs_path=args.programs_path,
        history_path=args.history_path,
        no_color=args.no_color,
        ascii=args.ascii,
        trace_path=args.trace_path,
    )


def _utcnow() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc)


@dataclass
class Environment:
    """Everything ``execute`` touches outside its arguments; swapped out in tests."""

    stdout: TextIO = field(default_factory=lambda: sys.stdout)
    stderr: TextIO = field(default_factory=lambda: sys.stderr)
    env: Mapping[str, str] = field(default_factory=lambda: dict(os.environ))
    clock_factory: Callable[[], object] = MonotonicClock
    utcnow: Callable[[], dt.datetime] = _utcnow
    interactive: bool | None = None
    commands: "queue.Queue[Command] | None" = None

    def is_interactive(self) -> bool:
        if self.interactive is not None:
            return self.interactive
        return sys.stdin.isatty() and _isatty(self.stdout)


def _isatty(stream) -> bool:
    try:
        return stream.isatty()
    except (AttributeError, ValueError):
        return False


def levenshtein(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def suggest(program_id: str, ids: Sequence[str]) -> str | None:
    scored = sorted((levenshtein(program_id, pid), pid) for pid in ids)
    if scored and scored[0][0] <= 2:
        return scored[0][1]
    return None


# -- subcommands -------------------------------------------------------------


def _require_program(inv: Invocation) -> str:
    if not inv.program_id:
        raise UsageError("", f"{inv.subcommand}: a program id is required")
    return inv.program_id


def _ratio_json(centis: int):
    return centis // 100 if centis % 100 == 0 else float(format_centis(centis))


def cmd_list(inv: Invocation, catalog: Catalog, settings: Settings, env: Environment) -> int:
    programs = catalog.list_programs()
    if inv.json:
        rows = [
            {"id": p.id, "name": p.name, "description": p.description, "source": p.source.value}
            for p in programs
        ]
        env.stdout.write(json.dumps(rows, indent=2, ensure_ascii=False) + "\n")
        return EXIT_OK
    for p in programs:
        env.stdout.write(f"{p.id:<18} {p.name:<18} {p.description}\n")
    return EXIT_OK


def cmd_info(inv: Invocation, catalog: Catalog, settings: Settings, env: Environment) -> int:
    program = catalog.get(_require_program(inv))
    if inv.json:
        data = {
            "id": program.id,
            "name": program.name,
            "description": program.description,
            "source": program.source.value,
            "source_note": program.source_note,
            "levels": {
                level.value: {
                    "inhale": _ratio_json(spec.inhale_ratio),
                    "retain": _ratio_json(spec.retain_ratio),
                    "exhale": _ratio_json(spec.exhale_ratio),
                    "sustain": _ratio_json(spec.sustain_ratio),
                    "unit": _ratio_json(spec.unit_seconds),
                    "cycles": spec.cycles,
                    "active_ms": spec.cycles * cycle_ms(spec),
                }
                for level, spec in program.specs.items()
            },
        }
        env.stdout.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
        return EXIT_OK
    out = env.stdout
    out.write(f"{program.name} ({program.id}, {program.source.value})\n")
    out.write(f"{program.description}\n")
    if program.source_note:
        out.write(f"source: {program.source_note}\n")
    out.write(f"\n{'level':<10} {'I:R:E:S':<16} {'unit (s)':<9} {'cycles':<7} active\n")
    for level, spec in program.specs.items():
        active = format_mmss(spec.cycles * cycle_ms(spec))
        out.write(f"{level.value:<10} {spec.ratio_text():<16} {spec.unit_text():<9} {spec.cycles:<7} {active}\n")
    return EXIT_OK


def cmd_plan(inv: Invocation, catalog: Catalog, settings: Settings, env: Environment) -> int:
    plan = plan_for(catalog, _require_program(inv), settings.level, settings.preparation_ms)
    env.stdout.write(plan.to_json())
    return EXIT_OK


def cmd_stats(inv: Invocation, catalog: Catalog, settings: Settings, env: Environment) -> int:
    records = HistoryStore(settings.history_path).read()
    summary = compute_stats(records, env.utcnow().date())
    if inv.json:
        env.stdout.write(json.dumps(summary.to_json_dict(), indent=2) + "\n")
        return EXIT_OK
    out = env.stdout
    seconds = summary.total_active_seconds
    out.write(f"sessions          {summary.total_sessions} ({summary.completed_sessions} completed)\n")
    out.write(f"active time       {format_mmss(int(seconds * 1000))} ({seconds} s, completed sessions)\n")
    out.write(f"current streak    {summary.current_streak_days} day(s) (UTC dates)\n")
    for pid, count in summary.per_program_counts.items():
        out.write(f"  {pid:<18} {count}\n")
    return EXIT_OK


def cmd_start(inv: Invocation, catalog: Catalog, settings: Settings, env: Environment) -> int:
    interactive = env.is_interactive()
    program_id, level = inv.program_id, settings.level
    if program_id is None:
        if not interactive:
            raise UsageError("", "start: --program is required when not attached to a terminal")
        try:
            choice = select_program(catalog, out=env.stdout, preparation_ms=settings.preparation_ms)
        except NotATTY as exc:
            raise UsageError("", str(exc)) from None
        if choice is None:
            env.stderr.write("cancelled\n")
            return EXIT_ABORTED
        program_id, level = choice
    else:
        catalog.get(program_id)

    plan = plan_for(catalog, program_id, level, settings.preparation_ms)
    program = catalog.get(program_id)
    env.stderr.write(
        f"{program.name} ({level.value}): {plan.cycles} cycles, {format_mmss(plan.total_ms)}"
        "  [space: pause/resume, q: quit]\n"
    )

    clock = env.clock_factory()
    commands = env.commands if env.commands is not None else queue.Queue()
    events: queue.Queue = queue.Queue()
    trace_file = open(inv.trace_path, "w", encoding="utf-8") if inv.trace_path else None
    sink = fanout(events.put, TraceWriter(trace_file) if trace_file else None)

    outcome: dict = {}

    def engine():
        try:
            outcome["result"] = run_session(plan, clock, commands, sink)
        except ClockFailure as exc:
            outcome["result"] = exc.result
            outcome["error"] = str(exc)
        except BaseException as exc:  # surfaced after the display loop exits
            outcome["error"] = f"{type(exc).__name__}: {exc}"
            events.put(None)

    restore_sigint = None
    if threading.current_thread() is threading.main_thread():
        restore_sigint = signal.signal(signal.SIGINT, lambda *_: commands.put(Command.ABORT))

    listener = None
    display = env.stdout if interactive else io.StringIO()
    worker = threading.Thread(target=engine, name="nafas-engine", daemon=True)
    try:
        with cbreak(sys.stdin.fileno()) if interactive and env.interactive is None else contextlib.nullcontext():
            if interactive and env.interactive is None:
                listener = KeyListener(sys.stdin.fileno(), commands)
                listener.start()
            worker.start()
            warnings = _view(events, clock, plan, display, settings, env, interactive)
            worker.join()
    finally:
        if listener is not None:
            listener.stop()
        if restore_sigint is not None:
            signal.signal(signal.SIGINT, restore_sigint)
        if trace_file is not None:
            trace_file.close()

    for warning in warnings:
        env.stderr.write(f"warning: {warning}\n")
    result: SessionResult | None = outcome.get("result")
    if result is None:
        env.stderr.write(f"error: {outcome.get('error')}\n")
        return EXIT_ERROR

    _record(result, program_id, level, settings, env)
    verb = "completed" if result.completed else "stopped"
    env.stdout.write(
        f"{verb}: {result.completed_cycles}/{result.planned_cycles} cycles, "
        f"{format_mmss(result.active_ms)} active\n"
    )
    if "error" in outcome:
        env.stderr.write(f"error: {outcome['error']}\n")
        return EXIT_ERROR
    return EXIT_OK if result.completed else EXIT_ABORTED


def _view(events, clock, plan, display, settings: Settings, env: Environment, interactive: bool) -> list[str]:
    ascii_bar = settings.ascii or not supports_unicode(display)
    color = settings.color and interactive

    return session_view_loop(
        _EngineEvents(events), clock, plan, display, silent=settings.silent, ascii=ascii_bar, color=color
    )


class _EngineEvents:
    """Event queue view that turns the engine-crash sentinel into a stop."""

    def __init__(self, inner: queue.Queue):
        self.inner = inner

    def _check(self, item):
        if item is None:
            return Aborted(at=0, completed_cycles=0)
        return item

    def get(self, timeout=None):
        return self._check(self.inner.get(timeout=timeout))

    def get_nowait(self):
        return self._check(self.inner.get_nowait())


def _record(result: SessionResult, program_id: str, level: Level, settings: Settings, env: Environment) -> None:
    record = HistoryRecord(
        ts=format_ts(env.utcnow()),
        program=program_id,
        level=level,
        planned_cycles=result.planned_cycles,
        completed_cycles=result.completed_cycles,
        active_seconds=seconds_from_ms(result.active_ms),
        completed=result.completed,
    )
    try:
        HistoryStore(settings.history_path).append(record)
    except OSError as exc:
        env.stderr.write(f"warning: could not write history: {exc}\n")


COMMANDS = {
    "start": cmd_start,
    "list": cmd_list,
    "info": cmd_info,
    "plan": cmd_plan,
    "stats": cmd_stats,
}


def execute(inv: Invocation, env: Environment | None = None) -> int:
    env = env or Environment()
    if inv.subcommand == "version":
        env.stdout.write(f"nafas {__version__}\n")
        return EXIT_OK
    try:
        settings = resolve_settings(
            env.env,
            level=inv.level,
            prep_seconds=inv.prep_seconds,
            silent=inv.silent,
            ascii=inv.ascii,
            no_color=inv.no_color,
            programs_path=inv.programs_path,
            history_path=inv.history_path,
        )
        catalog = Catalog.load(settings.programs_path, required=settings.programs_required)
        return COMMANDS[inv.subcommand](inv, catalog, settings, env)
    except UsageError as exc:
        env.stderr.write(f"nafas: {exc}\n")
        return EXIT_USAGE
    except UnknownProgram as exc:
        hint = suggest(exc.program_id, catalog.ids())
        env.stderr.write(f"nafas: {exc}" + (f"; did you mean {hint!r}?" if hint else "") + "\n")
        return EXIT_ERROR
    except (CatalogError, ConfigError, OSError) as exc:
        env.stderr.write(f"nafas: {exc}\n")
        return EXIT_ERROR


def main(argv: Sequence[str] | None = None, env: Environment | None = None) -> int:
    env = env or Environment()
    try:
        inv = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        env.stderr.write(build_parser().format_usage())
        env.stderr.write(f"nafas: error: {exc}\n")
        return EXIT_USAGE
    return execute(inv, env)


if __name__ == "__main__":
    sys.exit(main())
