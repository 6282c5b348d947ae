"""Measure how far real-clock sessions land from their schedule.

Runs short plans on the monotonic clock, compares every actual step start
against its absolute deadline, and prints per-run error in milliseconds.

    python scripts/drift_benchmark.py --steps 10 --step-ms 1000 --runs 3
"""

import argparse
import queue
import statistics
import time

from nafas.catalog import LevelSpec
from nafas.engine import MonotonicClock, StepStarted, run_session
from nafas.planner import build_plan


def one_run(steps: int, step_ms: int) -> tuple[int, list[int]]:
    # 1:0:1:0 gives two equal steps per cycle
    unit_centis = step_ms // 10
    plan = build_plan(LevelSpec(100, 0, 100, 0, unit_centis, steps // 2), 0)
    clock = MonotonicClock()
    lateness = []

    def sink(event):
        if isinstance(event, StepStarted) and event.step_index > 0:
            scheduled = plan_start + sum(s.duration_ms for s in plan.steps[: event.step_index])
            lateness.append(time.monotonic_ns() // 1_000_000 - scheduled)

    plan_start = clock.now()
    result = run_session(plan, clock, queue.Queue(), sink)
    return (result.ended_at - result.started_at) - plan.total_ms, lateness


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=10)
    parser.add_argument("--step-ms", type=int, default=1000)
    parser.add_argument("--runs", type=int, default=3)
    args = parser.parse_args()
    if args.steps % 2 or args.step_ms % 10:
        parser.error("--steps must be even and --step-ms a multiple of 10")

    for n in range(args.runs):
        end_error, lateness = one_run(args.steps, args.step_ms)
        print(
            f"run {n + 1}: end error {end_error:+d} ms, step lateness "
            f"mean {statistics.mean(lateness):.2f} max {max(lateness)} ms"
        )


if __name__ == "__main__":
    main()
