"""Session state machine driven by absolute deadlines on an injected clock.

Step deadlines are derived from the previous deadline, never from the time the
engine happened to wake up, so lateness in one step does not carry over into
the next. Time is integer milliseconds throughout.
"""

from __future__ import annotations

import enum
import json
import queue
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Protocol, TextIO, Union

from nafas.planner import SessionPlan, StepKind


class Command(enum.Enum):
    TOGGLE_PAUSE = "toggle_pause"
    ABORT = "abort"


class EngineError(Exception):
    pass


class IllegalTransition(EngineError):
    def __init__(self, state: "EngineState", event: object):
        super().__init__(f"{type(event).__name__} not allowed in {state.status.value}")
        self.state = state
        self.input = event


class ClockFailure(EngineError):
    def __init__(self, message: str, result: "SessionResult | None" = None):
        super().__init__(message)
        self.result = result


# -- events ------------------------------------------------------------------


@dataclass(frozen=True)
class StepStarted:
    step_index: int
    kind: StepKind
    cycle: int | None
    deadline: int


@dataclass(frozen=True)
class StepCompleted:
    step_index: int


@dataclass(frozen=True)
class CycleCompleted:
    cycle: int


@dataclass(frozen=True)
class Paused:
    at: int


@dataclass(frozen=True)
class Resumed:
    at: int
    pause_duration_ms: int


@dataclass(frozen=True)
class Aborted:
    at: int
    completed_cycles: int


@dataclass(frozen=True)
class Finished:
    at: int
    active_ms: int


SessionEvent = Union[StepStarted, StepCompleted, CycleCompleted, Paused, Resumed, Aborted, Finished]

_EVENT_NAMES = {
    StepStarted: "step_started",
    StepCompleted: "step_completed",
    CycleCompleted: "cycle_completed",
    Paused: "paused",
    Resumed: "resumed",
    Aborted: "aborted",
    Finished: "finished",
}


def event_to_dict(event: SessionEvent) -> dict:
    data = {"event": _EVENT_NAMES[type(event)]}
    for key, value in asdict(event).items():
        data[key] = value.value if isinstance(value, enum.Enum) else value
    return data


def is_terminal(event: SessionEvent) -> bool:
    return isinstance(event, (Finished, Aborted))


# -- state machine -----------------------------------------------------------


class Status(enum.Enum):
    READY = "ready"
    RUNNING = "running"
    PAUSED = "paused"
    FINISHED = "finished"
    ABORTED = "aborted"


@dataclass(frozen=True)
class EngineState:
    status: Status = Status.READY
    step_index: int = 0
    # absolute end of the current step while running
    deadline: int = 0
    # time left in the current step while paused
    remaining_ms: int = 0
    paused_at: int = 0
    start: int = 0
    now: int = 0
    paused_ms: int = 0
    completed_cycles: int = 0

    @property
    def is_terminal(self) -> bool:
        return self.status in (Status.FINISHED, Status.ABORTED)


@dataclass(frozen=True)
class Start:
    at: int


@dataclass(frozen=True)
class DeadlineReached:
    at: int


@dataclass(frozen=True)
class CommandInput:
    command: Command
    at: int


@dataclass(frozen=True)
class ClockTick:
    at: int


EngineInput = Union[Start, DeadlineReached, CommandInput, ClockTick]


def _started(plan: SessionPlan, index: int, deadline: int) -> StepStarted:
    step = plan.steps[index]
    return StepStarted(index, step.kind, step.cycle, deadline)


def step_transition(
    plan: SessionPlan, state: EngineState, event: EngineInput
) -> tuple[EngineState, list[SessionEvent]]:
    """Pure transition function; ``run_session`` is only a driver around it.

    Raises ``ClockFailure`` if time goes backwards and ``IllegalTransition``
    for inputs the current state cannot accept; the given state is unchanged
    in both cases since states are immutable.
    """
    at = event.at
    if state.status is not Status.READY and at < state.now:
        raise ClockFailure(f"clock went backwards: {at} < {state.now}")

    if state.is_terminal:
        if isinstance(event, (CommandInput, ClockTick)):
            return replace(state, now=at), []
        raise IllegalTransition(state, event)

    if state.status is Status.READY:
        if not isinstance(event, Start):
            raise IllegalTransition(state, event)
        deadline = at + plan.steps[0].duration_ms
        new = EngineState(Status.RUNNING, 0, deadline, start=at, now=at)
        return new, [_started(plan, 0, deadline)]

    if isinstance(event, Start):
        raise IllegalTransition(state, event)

    if isinstance(event, ClockTick):
        if state.status is Status.RUNNING and at >= state.deadline:
            return step_transition(plan, state, DeadlineReached(at))
        return replace(state, now=at), []

    if isinstance(event, DeadlineReached):
        if state.status is not Status.RUNNING or at < state.deadline:
            raise IllegalTransition(state, event)
        return _advance(plan, state, at)

    command = event.command
    if command is Command.ABORT:
        paused_ms = state.paused_ms
        if state.status is Status.PAUSED:
            paused_ms += at - state.paused_at
        new = replace(state, status=Status.ABORTED, now=at, paused_ms=paused_ms)
        return new, [Aborted(at, state.completed_cycles)]

    if state.status is Status.RUNNING:
        remaining = state.deadline - at
        if remaining <= 0:
            # the step is already over; finish it before pausing the next one
            state, events = _advance(plan, state, at)
            if state.is_terminal:
                return state, events
            more_state, more = step_transition(plan, state, event)
            return more_state, events + more
        new = replace(state, status=Status.PAUSED, remaining_ms=remaining, paused_at=at, now=at)
        return new, [Paused(at)]

    pause = at - state.paused_at
    new = replace(
        state,
        status=Status.RUNNING,
        deadline=at + state.remaining_ms,
        remaining_ms=0,
        now=at,
        paused_ms=state.paused_ms + pause,
    )
    return new, [Resumed(at, pause)]


def _advance(plan: SessionPlan, state: EngineState, at: int) -> tuple[EngineState, list[SessionEvent]]:
    index = state.step_index
    events: list[SessionEvent] = [StepCompleted(index)]
    completed = state.completed_cycles
    if plan.ends_cycle(index):
        events.append(CycleCompleted(plan.steps[index].cycle))
        completed += 1
    if index + 1 < len(plan.steps):
        deadline = state.deadline + plan.steps[index + 1].duration_ms
        events.append(_started(plan, index + 1, deadline))
        return replace(state, step_index=index + 1, deadline=deadline, now=at, completed_cycles=completed), events
    active = at - state.start - state.paused_ms
    events.append(Finished(at, active))
    return replace(state, status=Status.FINISHED, now=at, completed_cycles=completed), events


# -- clocks ------------------------------------------------------------------


class CommandSource(Protocol):
    def get(self, block: bool = True, timeout: float | None = None) -> Command: ...

    def get_nowait(self) -> Command: ...


class Clock(Protocol):
    def now(self) -> int:
        """Monotonic instant in integer milliseconds."""

    def wait_until(self, deadline: int | None, commands: CommandSource | None) -> Command | None:
        """Block until ``deadline`` (forever if None) or a command arrives.

        Returns the command that interrupted the wait, or None when the
        deadline was reached.
        """


class MonotonicClock:
    def now(self) -> int:
        return time.monotonic_ns() // 1_000_000

    def wait_until(self, deadline, commands):
        while True:
            if deadline is None:
                timeout = None
            else:
                remaining = deadline - self.now()
                if remaining <= 0:
                    return None
                timeout = remaining / 1000
            if commands is None:
                time.sleep(timeout if timeout is not None else 3600)
                continue
            try:
                return commands.get(timeout=timeout)
            except queue.Empty:
                continue


class VirtualClockExhausted(EngineError):
    pass


@dataclass
class VirtualClock:
    """Deterministic clock that jumps straight to the next deadline.

    ``script`` holds ``(at_ms, command)`` pairs that are delivered as if a user
    had pressed a key at that instant. A command scheduled exactly on a
    deadline is delivered after the deadline is processed.
    """

    script: list[tuple[int, Command]] = field(default_factory=list)
    time: int = 0

    def __post_init__(self):
        self.script = sorted(self.script, key=lambda item: item[0])

    def now(self) -> int:
        return self.time

    def advance(self, ms: int) -> None:
        self.time += ms

    def wait_until(self, deadline, commands):
        if commands is not None:
            try:
                return commands.get_nowait()
            except queue.Empty:
                pass
        if self.script:
            at, command = self.script[0]
            if deadline is None or at < deadline:
                self.script.pop(0)
                self.time = max(self.time, at)
                return command
        if deadline is None:
            raise VirtualClockExhausted("paused with no scripted command left")
        self.time = max(self.time, deadline)
        return None


# -- driver ------------------------------------------------------------------


class Outcome(enum.Enum):
    COMPLETED = "completed"
    ABORTED_BY_USER = "aborted"


@dataclass(frozen=True)
class SessionResult:
    outcome: Outcome
    completed_cycles: int
    active_ms: int
    paused_ms: int
    planned_cycles: int = 0
    started_at: int = 0
    ended_at: int = 0

    @property
    def completed(self) -> bool:
        return self.outcome is Outcome.COMPLETED


def _result(plan: SessionPlan, state: EngineState) -> SessionResult:
    elapsed = state.now - state.start
    outcome = Outcome.COMPLETED if state.status is Status.FINISHED else Outcome.ABORTED_BY_USER
    return SessionResult(
        outcome=outcome,
        completed_cycles=state.completed_cycles,
        active_ms=elapsed - state.paused_ms,
        paused_ms=state.paused_ms,
        planned_cycles=plan.cycles,
        started_at=state.start,
        ended_at=state.now,
    )


EventSink = Callable[[SessionEvent], None]


def run_session(
    plan: SessionPlan,
    clock: Clock,
    commands: CommandSource | None = None,
    events: EventSink | None = None,
) -> SessionResult:
    emit = events or (lambda _event: None)
    state = EngineState()
    state, out = step_transition(plan, state, Start(clock.now()))
    for ev in out:
        emit(ev)

    while not state.is_terminal:
        deadline = state.deadline if state.status is Status.RUNNING else None
        command = clock.wait_until(deadline, commands)
        now = clock.now()
        if command is None:
            step_input: EngineInput = DeadlineReached(now)
        else:
            step_input = CommandInput(command, now)
        try:
            state, out = step_transition(plan, state, step_input)
        except ClockFailure as exc:
            # abort at the last good instant so the record stays consistent
            state, out = step_transition(plan, state, CommandInput(Command.ABORT, state.now))
            for ev in out:
                emit(ev)
            raise ClockFailure(str(exc), _result(plan, state)) from None
        for ev in out:
            emit(ev)
    return _result(plan, state)


class TraceWriter:
    """Event sink writing one JSON object per line."""

    def __init__(self, stream: TextIO, forward: EventSink | None = None):
        self.stream = stream
        self.forward = forward

    def __call__(self, event: SessionEvent) -> None:
        self.stream.write(json.dumps(event_to_dict(event), sort_keys=False) + "\n")
        if self.forward is not None:
            self.forward(event)


def fanout(*sinks: EventSink | None) -> EventSink:
    active = [s for s in sinks if s is not None]

    def sink(event: SessionEvent) -> None:
        for s in active:
            s(event)

    return sink


def replay(plan: SessionPlan, inputs: Iterable[EngineInput]) -> tuple[EngineState, list[SessionEvent]]:
    """Fold inputs through ``step_transition``; handy for tests and tooling."""
    state = EngineState()
    events: list[SessionEvent] = []
    for item in inputs:
        state, out = step_transition(plan, state, item)
        events.extend(out)
    return state, events
