"""Terminal front end: program menu, single-line live display, keyboard steering.

The display holds no engine handle. It only consumes session events and feeds
commands back through the engine's command queue.
"""

from __future__ import annotations

import contextlib
import locale
import os
import queue
import select
import sys
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, TextIO

from nafas.catalog import Catalog, Level
from nafas.engine import (
    Command,
    Finished,
    Paused,
    Resumed,
    SessionEvent,
    StepStarted,
    is_terminal,
)
from nafas.planner import SessionPlan, StepKind, plan_for

PHASE_LABELS = {
    StepKind.PREPARATION: "Get Ready",
    StepKind.INHALE: "Inhale",
    StepKind.RETAIN: "Hold",
    StepKind.EXHALE: "Exhale",
    StepKind.SUSTAIN: "Hold Empty",
}
LABEL_WIDTH = max(len(label) for label in PHASE_LABELS.values())
BAR_GLYPHS = 24
UNICODE_BAR = ("█", "░")
ASCII_BAR = ("#", "-")
BELL = "\a"
REFRESH_SECONDS = 0.1


class NotATTY(RuntimeError):
    pass


@dataclass(frozen=True)
class ViewState:
    phase_label: str
    step_elapsed_ms: int
    step_total_ms: int
    # "cycle k/N", or "prep" during preparation
    cycle_display: str
    session_remaining_ms: int = 0
    paused: bool = False
    silent: bool = False


def format_mmss(ms: int) -> str:
    seconds = max(ms, 0) // 1000
    return f"{seconds // 60:02d}:{seconds % 60:02d}"


def render_frame(view: ViewState, width: int = 80, ascii: bool = False) -> str:
    """One display line, led by a carriage return and never wider than ``width``.

    When space runs out the bar shrinks first; the countdown is never cut.
    """
    total = max(view.step_total_ms, 1)
    elapsed = min(max(view.step_elapsed_ms, 0), total)
    countdown = format_mmss(total - elapsed)
    head = f"\r{view.phase_label:<{LABEL_WIDTH}} {countdown}"
    badge = " PAUSED"
    tail = f" {view.cycle_display}" + (badge if view.paused else "")

    # room for the badge is reserved so pausing never resizes the bar
    budget = min(BAR_GLYPHS, width - len(head) - len(f" {view.cycle_display}") - len(badge) - 3)
    if budget >= 4:
        full, empty = ASCII_BAR if ascii else UNICODE_BAR
        filled = elapsed * budget // total
        bar = f" [{full * filled}{empty * (budget - filled)}]"
    else:
        bar = ""
    return (head + bar + tail)[: max(width, len(head))]


def supports_unicode(stream: TextIO) -> bool:
    encoding = getattr(stream, "encoding", None) or locale.getpreferredencoding(False)
    return "utf" in encoding.lower()


class SessionView:
    """Turns the event stream plus the current clock reading into ViewStates."""

    def __init__(self, plan: SessionPlan, silent: bool = False):
        self.plan = plan
        self.silent = silent
        # remaining session time after step i ends
        after = [0] * len(plan.steps)
        acc = 0
        for i in range(len(plan.steps) - 1, -1, -1):
            after[i] = acc
            acc += plan.steps[i].duration_ms
        self._after = after
        self.step_index = 0
        self.deadline = plan.steps[0].duration_ms
        self.paused = False
        self.finished = False
        self._frozen_remaining = 0
        self._last_elapsed = 0

    def handle(self, event: SessionEvent) -> None:
        if isinstance(event, StepStarted):
            self.step_index = event.step_index
            self.deadline = event.deadline
            self._last_elapsed = 0
        elif isinstance(event, Paused):
            self.paused = True
            self._frozen_remaining = self.deadline - event.at
        elif isinstance(event, Resumed):
            self.paused = False
            self.deadline += event.pause_duration_ms
        elif isinstance(event, Finished):
            self.finished = True
            self.paused = False

    def view(self, now: int) -> ViewState:
        step = self.plan.steps[self.step_index]
        duration = step.duration_ms
        if self.finished:
            remaining = 0
        elif self.paused:
            remaining = self._frozen_remaining
        else:
            remaining = self.deadline - now
        remaining = min(max(remaining, 0), duration)
        elapsed = max(duration - remaining, self._last_elapsed)
        self._last_elapsed = elapsed
        if step.cycle is None:
            cycle = "prep"
        else:
            cycle = f"cycle {step.cycle + 1}/{self.plan.cycles}"
        return ViewState(
            phase_label=PHASE_LABELS[step.kind],
            step_elapsed_ms=elapsed,
            step_total_ms=duration,
            cycle_display=cycle,
            session_remaining_ms=(duration - elapsed) + self._after[self.step_index],
            paused=self.paused,
            silent=self.silent,
        )


def session_view_loop(
    events: "queue.Queue[SessionEvent]",
    clock,
    plan: SessionPlan,
    out: TextIO,
    *,
    silent: bool = False,
    ascii: bool = False,
    color: bool = False,
    width: int | None = None,
    refresh: float = REFRESH_SECONDS,
) -> list[str]:
    """Render until a terminal event arrives. Returns warnings for the caller.

    A failing terminal does not stop the loop; events keep being consumed so
    the engine is never blocked, and the failure is reported on return.
    """
    if width is None:
        width = _terminal_width(out)
    view = SessionView(plan, silent=silent)
    warnings: list[str] = []
    done = False
    last_len = 0

    def write(text: str) -> None:
        if warnings:
            return
        try:
            out.write(text)
            out.flush()
        except (OSError, ValueError) as exc:
            warnings.append(f"display disabled: {exc}")

    try:
        while not done:
            try:
                batch = [events.get(timeout=refresh)]
            except queue.Empty:
                batch = []
            while True:
                try:
                    batch.append(events.get_nowait())
                except queue.Empty:
                    break
            for event in batch:
                view.handle(event)
                if isinstance(event, StepStarted) and not silent:
                    write(BELL)
                if is_terminal(event):
                    done = True
            frame = render_frame(view.view(clock.now()), width, ascii=ascii)
            # blank out whatever a longer previous frame left behind
            frame, last_len = frame.ljust(last_len), len(frame)
            if color:
                frame = "\r" + _color_for(view) + frame[1:] + "\x1b[0m"
            write(frame)
    finally:
        write("\n")
    return warnings


def _color_for(view: SessionView) -> str:
    kind = view.plan.steps[view.step_index].kind
    if view.paused:
        return "\x1b[33m"
    return {
        StepKind.PREPARATION: "\x1b[2m",
        StepKind.INHALE: "\x1b[36m",
        StepKind.EXHALE: "\x1b[32m",
    }.get(kind, "\x1b[35m")


def _terminal_width(out: TextIO) -> int:
    try:
        return max(os.get_terminal_size(out.fileno()).columns, 40)
    except (AttributeError, OSError, ValueError):
        return 80


# -- keyboard ----------------------------------------------------------------


def command_for_key(key: str) -> Command | None:
    """Space pauses or resumes; q and Ctrl-C abort; every other key is ignored."""
    if key == "space":
        return Command.TOGGLE_PAUSE
    if key in ("q", "ctrl-c"):
        return Command.ABORT
    return None


_ESCAPES = {"[A": "up", "[B": "down", "OA": "up", "OB": "down", "[C": "right", "[D": "left"}


def decode_keys(read: Callable[[], str], pending: Callable[[], bool]) -> Iterator[str]:
    """Translate raw terminal input into key names.

    ``read`` returns one character ('' at end of input); ``pending`` says
    whether more input is immediately available, which separates a bare Esc
    from the start of an arrow-key sequence.
    """
    while True:
        ch = read()
        if ch == "":
            return
        if ch == "\x1b":
            if not pending():
                yield "esc"
                continue
            seq = read() + read()
            yield _ESCAPES.get(seq, "esc")
        elif ch in ("\r", "\n"):
            yield "enter"
        elif ch == " ":
            yield "space"
        elif ch == "\x03":
            yield "ctrl-c"
        else:
            yield ch


def _fd_reader(fd: int):
    def read() -> str:
        data = os.read(fd, 1)
        return data.decode("utf-8", "replace") if data else ""

    def pending() -> bool:
        return bool(select.select([fd], [], [], 0.05)[0])

    return read, pending


@contextlib.contextmanager
def cbreak(fd: int):
    """Unbuffered, no-echo input for the duration of the block."""
    import termios
    import tty

    saved = termios.tcgetattr(fd)
    try:
        tty.setcbreak(fd)
        yield
    finally:
        termios.tcsetattr(fd, termios.TCSADRAIN, saved)


class KeyListener(threading.Thread):
    """Feeds session commands from the keyboard into the engine's queue."""

    def __init__(self, fd: int, commands: "queue.Queue[Command]"):
        super().__init__(daemon=True, name="nafas-keys")
        self.fd = fd
        self.commands = commands
        self._stop_event = threading.Event()

    def stop(self) -> None:
        self._stop_event.set()

    def run(self) -> None:
        read, pending = _fd_reader(self.fd)

        def read_until_stopped() -> str:
            while not self._stop_event.is_set():
                if select.select([self.fd], [], [], 0.1)[0]:
                    return read()
            return ""

        for key in decode_keys(read_until_stopped, pending):
            command = command_for_key(key)
            if command is not None:
                self.commands.put(command)


# -- menu --------------------------------------------------------------------


def _level_totals(catalog: Catalog, program_id: str, preparation_ms: int) -> str:
    parts = []
    for level in Level:
        plan = plan_for(catalog, program_id, level, preparation_ms)
        parts.append(f"{level.letter} {format_mmss(plan.total_ms)}")
    return "  ".join(parts)


def _menu_lines(catalog: Catalog, stage: str, cursor: int, program_id: str | None, prep: int) -> list[str]:
    programs = catalog.list_programs()
    if stage == "program":
        lines = ["Choose a program (↑/↓ or j/k, Enter to select, q to quit)"]
        for i, program in enumerate(programs):
            marker = ">" if i == cursor else " "
            lines.append(f"{marker} {program.name:<18} {_level_totals(catalog, program.id, prep)}")
        lines.append("  " + programs[cursor].description)
        return lines
    program = catalog.get(program_id)
    lines = [f"{program.name}: choose a level (Enter to start, q to quit)"]
    for i, level in enumerate(Level):
        spec = program.spec(level)
        total = plan_for(catalog, program.id, level, prep).total_ms
        marker = ">" if i == cursor else " "
        lines.append(
            f"{marker} {level.value:<9} {spec.ratio_text():<14} unit {spec.unit_text():<4} "
            f"cycles {spec.cycles:<3} {format_mmss(total)}"
        )
    return lines


def select_program(
    catalog: Catalog,
    keys: Iterable[str] | None = None,
    out: TextIO | None = None,
    preparation_ms: int = 3000,
) -> tuple[str, Level] | None:
    """Interactive two-stage menu. Returns ``(program_id, level)``, or None if cancelled."""
    out = out if out is not None else sys.stdout
    if keys is None:
        if not (sys.stdin.isatty() and out.isatty()):
            raise NotATTY("interactive selection needs a terminal; pass --program")
        fd = sys.stdin.fileno()
        with cbreak(fd):
            return select_program(catalog, decode_keys(*_fd_reader(fd)), out, preparation_ms)

    programs = catalog.list_programs()
    stage, cursor, chosen = "program", 0, None
    drawn = 0

    def draw():
        nonlocal drawn
        lines = _menu_lines(catalog, stage, cursor, chosen, preparation_ms)
        if drawn:
            out.write(f"\x1b[{drawn}F\x1b[J")
        out.write("\n".join(lines) + "\n")
        out.flush()
        drawn = len(lines)

    draw()
    for key in keys:
        size = len(programs) if stage == "program" else len(Level)
        if key in ("down", "j"):
            cursor = min(cursor + 1, size - 1)
        elif key in ("up", "k"):
            cursor = max(cursor - 1, 0)
        elif key in ("esc", "q", "ctrl-c"):
            return None
        elif key == "enter":
            if stage == "program":
                stage, chosen, cursor = "level", programs[cursor].id, 0
            else:
                return chosen, list(Level)[cursor]
        else:
            continue
        draw()
    return None
