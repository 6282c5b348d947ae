"""Expand a level spec into an ordered list of millisecond-timed steps."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from nafas.catalog import Catalog, Level, LevelSpec, validate_spec

DEFAULT_PREPARATION_MS = 3000


class InvalidSpec(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class StepKind(enum.Enum):
    PREPARATION = "preparation"
    INHALE = "inhale"
    RETAIN = "retain"
    EXHALE = "exhale"
    SUSTAIN = "sustain"


PHASES = (StepKind.INHALE, StepKind.RETAIN, StepKind.EXHALE, StepKind.SUSTAIN)


@dataclass(frozen=True)
class PlanStep:
    kind: StepKind
    duration_ms: int
    # None for the preparation step
    cycle: int | None

    @property
    def is_preparation(self) -> bool:
        return self.kind is StepKind.PREPARATION


@dataclass(frozen=True)
class SessionPlan:
    program_id: str
    level: Level | None
    steps: tuple[PlanStep, ...]
    cycles: int
    preparation_ms: int
    total_ms: int

    def ends_cycle(self, index: int) -> bool:
        """True when step ``index`` is the last step of its cycle."""
        step = self.steps[index]
        if step.is_preparation:
            return False
        return index + 1 == len(self.steps) or self.steps[index + 1].cycle != step.cycle

    def to_json_dict(self) -> dict:
        return {
            "program": self.program_id,
            "level": self.level.value if self.level else None,
            "preparation_ms": self.preparation_ms,
            "total_ms": self.total_ms,
            "cycles": self.cycles,
            "steps": [
                {"kind": s.kind.value, "duration_ms": s.duration_ms, "cycle": s.cycle}
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def phase_ms(ratio_centis: int, unit_centis: int) -> int:
    # hundredths x hundredths = 1e-4 s; x1000 ms => divide by 10
    product = ratio_centis * unit_centis
    if product % 10:
        raise InvalidSpec([f"phase of {product / 10} ms is not a whole millisecond"])
    return product // 10


def build_plan(
    spec: LevelSpec,
    preparation_ms: int = DEFAULT_PREPARATION_MS,
    *,
    program_id: str = "",
    level: Level | None = None,
) -> SessionPlan:
    violations = validate_spec(spec)
    if isinstance(preparation_ms, bool) or not isinstance(preparation_ms, int) or preparation_ms < 0:
        violations.append("preparation_ms must be a nonnegative integer")
    if violations:
        raise InvalidSpec(violations)

    cycle_block = [
        (kind, phase_ms(ratio, spec.unit_seconds))
        for kind, ratio in zip(PHASES, spec.ratios)
        if ratio > 0
    ]
    steps = []
    if preparation_ms > 0:
        steps.append(PlanStep(StepKind.PREPARATION, preparation_ms, None))
    for cycle in range(spec.cycles):
        steps.extend(PlanStep(kind, ms, cycle) for kind, ms in cycle_block)
    return SessionPlan(
        program_id=program_id,
        level=level,
        steps=tuple(steps),
        cycles=spec.cycles,
        preparation_ms=preparation_ms,
        total_ms=sum(s.duration_ms for s in steps),
    )


def plan_for(
    catalog: Catalog, program_id: str, level: Level, preparation_ms: int = DEFAULT_PREPARATION_MS
) -> SessionPlan:
    spec = catalog.get_spec(program_id, level)
    return build_plan(spec, preparation_ms, program_id=program_id, level=level)


def total_duration(plan: SessionPlan) -> int:
    return sum(s.duration_ms for s in plan.steps)


def cycle_ms(spec: LevelSpec) -> int:
    """Length of one cycle: unit x (I+R+E+S), in milliseconds."""
    return spec.unit_seconds * spec.ratio_sum // 10
