import io
import queue

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nafas.catalog import Catalog, Level, LevelSpec
from nafas.engine import Command, Paused, StepStarted, VirtualClock, run_session
from nafas.planner import build_plan, plan_for
from nafas.tui import (
    BELL,
    SessionView,
    ViewState,
    command_for_key,
    decode_keys,
    format_mmss,
    render_frame,
    select_program,
    session_view_loop,
)


def frame(label="Inhale", elapsed=1500, total=3000, cycle="cycle 1/35", **kw):
    return ViewState(label, elapsed, total, cycle, **kw)


def bar_of(text):
    return text[text.index("[") + 1 : text.index("]")]


class TestRenderFrame:
    def test_midpoint(self):
        out = render_frame(frame(), 60)
        bar = bar_of(out)
        assert bar.count("█") == bar.count("░") == len(bar) // 2
        assert "00:01" in out
        assert "Inhale" in out and "cycle 1/35" in out
        assert len(out) <= 60

    def test_initial_preparation(self):
        out = render_frame(frame("Get Ready", 0, 3000, "prep"), 60)
        assert "Get Ready" in out
        assert "█" not in bar_of(out)
        assert "00:03" in out

    def test_final_frame(self):
        # anti-stress beginner exhale is 0.66 x 3 s = 1980 ms
        plan = plan_for(Catalog(), "anti-stress", Level.BEGINNER, 0)
        assert plan.steps[-1].duration_ms == 1980
        out = render_frame(frame("Exhale", 1980, 1980, "cycle 20/20"), 60)
        assert "░" not in bar_of(out)
        assert "00:00" in out

    def test_ascii(self):
        out = render_frame(frame(), 60, ascii=True)
        assert set(bar_of(out)) == {"#", "-"}

    def test_paused_badge(self):
        assert render_frame(frame(paused=True), 60).endswith("PAUSED")

    def test_only_leading_carriage_return(self):
        out = render_frame(frame(paused=True), 80)
        assert out.startswith("\r")
        assert not any(ord(c) < 32 for c in out[1:])

    @given(
        st.integers(40, 200),
        st.integers(0, 10**7),
        st.integers(1, 10**7),
        st.sampled_from(["Inhale", "Hold", "Exhale", "Hold Empty", "Get Ready"]),
        st.sampled_from(["prep", "cycle 1/1", "cycle 120/120"]),
        st.booleans(),
    )
    def test_width_and_countdown_survive(self, width, elapsed, total, label, cycle, paused):
        view = ViewState(label, min(elapsed, total), total, cycle, paused=paused)
        out = render_frame(view, width)
        assert len(out) <= width
        assert format_mmss(total - min(elapsed, total)) in out
        assert render_frame(view, width) == out

    def test_narrow_drops_bar_first(self):
        out = render_frame(frame(cycle="cycle 100/100", paused=True), 40)
        assert "00:01" in out and len(out) <= 40


def test_format_mmss():
    assert format_mmss(0) == "00:00"
    assert format_mmss(1999) == "00:01"
    assert format_mmss(423000) == "07:03"


def test_key_contract():
    assert command_for_key("space") is Command.TOGGLE_PAUSE
    assert command_for_key("q") is Command.ABORT
    assert command_for_key("ctrl-c") is Command.ABORT
    for key in ("enter", "esc", "up", "down", "j", "k", "x", "Q"):
        assert command_for_key(key) is None


def test_decode_keys():
    data = iter("\x1b[A\x1b[B\r \x03q\x1bz")
    buffered = list("\x1b[A\x1b[B\r \x03q\x1bz")

    def read():
        if buffered:
            buffered.pop(0)
        return next(data, "")

    def pending():
        # bare Esc when the next char is not part of a CSI sequence
        return bool(buffered) and buffered[0] == "["

    assert list(decode_keys(read, pending)) == ["up", "down", "enter", "space", "ctrl-c", "q", "esc", "z"]


class TestSelect:
    def test_defaults(self, catalog):
        assert select_program(catalog, ["enter", "enter"], io.StringIO()) == ("clear-mind", Level.BEGINNER)

    def test_last_program_last_level(self, catalog):
        keys = ["down"] * 12 + ["enter", "down", "down", "enter"]
        assert select_program(catalog, keys, io.StringIO()) == ("balancing", Level.ADVANCED)

    def test_cancel(self, catalog):
        assert select_program(catalog, ["q"], io.StringIO()) is None
        assert select_program(catalog, ["enter", "esc"], io.StringIO()) is None

    def test_jk_and_clamping(self, catalog):
        keys = ["k", "j", "j", "k"] + ["j"] * 30 + ["enter", "j", "enter"]
        assert select_program(catalog, keys, io.StringIO()) == ("balancing", Level.MEDIUM)

    def test_shows_descriptions_and_totals(self, catalog):
        out = io.StringIO()
        select_program(catalog, ["q"], out, preparation_ms=0)
        text = out.getvalue()
        assert catalog.get("clear-mind").description in text
        assert "B 07:00" in text  # 35 x 12 s

    def test_needs_tty(self, catalog, monkeypatch):
        from nafas.tui import NotATTY

        monkeypatch.setattr("sys.stdin", io.StringIO())
        with pytest.raises(NotATTY):
            select_program(catalog, None, io.StringIO())


def _events_for(plan, script=()):
    q = queue.Queue()
    clock = VirtualClock(list(script))
    run_session(plan, clock, None, q.put)
    return q, clock


def two_step_plan():
    return build_plan(LevelSpec.of("1:0:1:0", 1, 1), 0)


def test_view_loop_silent():
    plan = two_step_plan()
    q, clock = _events_for(plan)
    out = io.StringIO()
    session_view_loop(q, clock, plan, out, silent=True, refresh=0.01)
    assert out.getvalue().count(BELL) == 0


def test_view_loop_bells_match_steps():
    plan = two_step_plan()
    q, clock = _events_for(plan)
    started = sum(isinstance(e, StepStarted) for e in list(q.queue))
    out = io.StringIO()
    session_view_loop(q, clock, plan, out, refresh=0.01)
    assert started == 2
    assert out.getvalue().count(BELL) == started
    assert out.getvalue().endswith("\n")


def test_view_loop_survives_broken_terminal():
    class Broken(io.StringIO):
        def write(self, text):
            raise OSError("gone")

    plan = two_step_plan()
    q, clock = _events_for(plan)
    warnings = session_view_loop(q, clock, plan, Broken(), refresh=0.01)
    assert warnings and "gone" in warnings[0]
    assert q.empty()


def test_pause_freezes_bar():
    plan = two_step_plan()
    view = SessionView(plan)
    view.handle(StepStarted(0, plan.steps[0].kind, 0, 1000))
    view.handle(Paused(400))
    a, b = view.view(500), view.view(900)
    assert a == b
    assert a.paused and a.step_elapsed_ms == 400
    assert "PAUSED" in render_frame(a, 60)


def test_fill_monotone_within_step():
    plan = plan_for(Catalog(), "relax2", Level.BEGINNER, 3000)
    view = SessionView(plan)
    view.handle(StepStarted(0, plan.steps[0].kind, None, 3000))
    seen = [view.view(t).step_elapsed_ms for t in (0, 100, 2000, 1500, 2999, 5000)]
    assert seen == sorted(seen)
    assert seen[-1] == 3000


def test_session_remaining():
    plan = build_plan(LevelSpec.of("1:0:1:0", 1, 2), 1000)
    view = SessionView(plan)
    view.handle(StepStarted(0, plan.steps[0].kind, None, 1000))
    assert view.view(250).session_remaining_ms == plan.total_ms - 250
    assert view.view(250).cycle_display == "prep"


def test_pause_keeps_bar_length():
    for width in (40, 50, 60, 80):
        a = render_frame(frame(), width)
        b = render_frame(frame(paused=True), width)
        if "[" in a:
            assert bar_of(a) == bar_of(b)


def test_shorter_frame_overwrites_longer():
    plan = two_step_plan()
    q, clock = _events_for(plan, [(200, Command.TOGGLE_PAUSE), (300, Command.TOGGLE_PAUSE)])
    out = io.StringIO()
    session_view_loop(q, clock, plan, out, silent=True, refresh=0.01, width=60)
    frames = out.getvalue().rstrip("\n").split("\r")[1:]
    assert all(len(f) == len(frames[0]) for f in frames)
