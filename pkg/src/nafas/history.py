"""Append-only JSON Lines session history and aggregate statistics."""

from __future__ import annotations

import datetime as dt
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable

from nafas.catalog import Level

log = logging.getLogger(__name__)

RECORD_KEYS = ("ts", "program", "level", "planned_cycles", "completed_cycles", "active_seconds", "completed")
TENTH = Decimal("0.1")


class InvalidRecord(ValueError):
    pass


def seconds_from_ms(ms: int) -> Decimal:
    return (Decimal(ms) / 1000).quantize(TENTH, rounding=ROUND_HALF_UP)


def format_ts(moment: dt.datetime) -> str:
    return moment.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(text: str) -> dt.datetime:
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    moment = dt.datetime.fromisoformat(text)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=dt.timezone.utc)
    return moment.astimezone(dt.timezone.utc)


@dataclass(frozen=True)
class HistoryRecord:
    ts: str
    program: str
    level: Level
    planned_cycles: int
    completed_cycles: int
    active_seconds: Decimal
    completed: bool

    def validate(self) -> None:
        for name in ("planned_cycles", "completed_cycles"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidRecord(f"{name} must be an integer")
        if not 0 <= self.completed_cycles <= self.planned_cycles:
            raise InvalidRecord(
                f"completed_cycles {self.completed_cycles} outside 0..{self.planned_cycles}"
            )
        if self.completed and self.completed_cycles != self.planned_cycles:
            raise InvalidRecord("a completed session must have completed every cycle")
        if not isinstance(self.active_seconds, Decimal) or self.active_seconds < 0:
            raise InvalidRecord("active_seconds must be a nonnegative decimal")
        if self.active_seconds != self.active_seconds.quantize(TENTH):
            raise InvalidRecord("active_seconds has more than one decimal place")
        if not isinstance(self.completed, bool):
            raise InvalidRecord("completed must be a boolean")
        try:
            parse_ts(self.ts)
        except (TypeError, ValueError):
            raise InvalidRecord(f"bad timestamp {self.ts!r}") from None

    @property
    def date(self) -> dt.date:
        return parse_ts(self.ts).date()

    def to_json(self) -> str:
        values = {
            "ts": json.dumps(self.ts, ensure_ascii=False),
            "program": json.dumps(self.program, ensure_ascii=False),
            "level": json.dumps(self.level.value),
            "planned_cycles": json.dumps(self.planned_cycles),
            "completed_cycles": json.dumps(self.completed_cycles),
            # a plain decimal literal with exactly one place, never a float repr
            "active_seconds": str(self.active_seconds.quantize(TENTH)),
            "completed": json.dumps(self.completed),
        }
        return "{" + ", ".join(f'"{key}": {values[key]}' for key in RECORD_KEYS) + "}"

    @classmethod
    def from_json(cls, line: str) -> "HistoryRecord":
        try:
            data = json.loads(line, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise InvalidRecord(str(exc)) from None
        if not isinstance(data, dict) or set(data) != set(RECORD_KEYS):
            raise InvalidRecord("wrong keys")
        seconds = data["active_seconds"]
        if isinstance(seconds, bool) or not isinstance(seconds, (int, Decimal)):
            raise InvalidRecord("active_seconds must be a number")
        if not isinstance(data["ts"], str) or not isinstance(data["program"], str):
            raise InvalidRecord("ts and program must be strings")
        try:
            level = Level(data["level"])
        except ValueError:
            raise InvalidRecord(f"bad level {data['level']!r}") from None
        record = cls(
            ts=data["ts"],
            program=data["program"],
            level=level,
            planned_cycles=data["planned_cycles"],
            completed_cycles=data["completed_cycles"],
            active_seconds=Decimal(seconds),
            completed=data["completed"],
        )
        record.validate()
        return record


@dataclass
class HistoryStore:
    path: Path

    def append(self, record: HistoryRecord) -> None:
        """Validate, then append one line. Earlier lines are never touched."""
        record.validate()
        line = record.to_json() + "\n"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        # one write call per record keeps appends line-atomic on local disks
        with self.path.open("a", encoding="utf-8") as fp:
            fp.write(line)

    def read(self) -> list[HistoryRecord]:
        if not self.path.exists():
            return []
        records = []
        text = self.path.read_text(encoding="utf-8")
        # not splitlines(): it also breaks on U+0085/U+2028, which JSON leaves unescaped
        for lineno, line in enumerate(text.split("\n"), 1):
            if not line.strip():
                continue
            try:
                records.append(HistoryRecord.from_json(line))
            except InvalidRecord as exc:
                log.warning("%s:%d: skipping malformed record (%s)", self.path, lineno, exc)
        return records


def append_record(store: HistoryStore, record: HistoryRecord) -> None:
    store.append(record)


@dataclass(frozen=True)
class StatsSummary:
    total_sessions: int = 0
    completed_sessions: int = 0
    total_active_seconds: Decimal = Decimal("0.0")
    per_program_counts: dict[str, int] = field(default_factory=dict)
    current_streak_days: int = 0

    def to_json_dict(self) -> dict:
        return {
            "total_sessions": self.total_sessions,
            "completed_sessions": self.completed_sessions,
            "total_active_seconds": float(self.total_active_seconds),
            "per_program_counts": dict(self.per_program_counts),
            "current_streak_days": self.current_streak_days,
        }


def streak_days(dates: Iterable[dt.date], today: dt.date) -> int:
    """Consecutive days with a completed session, ending today.

    A chain that ends yesterday still counts, since today's session may simply
    not have happened yet.
    """
    days = set(dates)
    if today in days:
        day = today
    elif today - dt.timedelta(days=1) in days:
        day = today - dt.timedelta(days=1)
    else:
        return 0
    count = 0
    while day in days:
        count += 1
        day -= dt.timedelta(days=1)
    return count


def compute_stats(records: Iterable[HistoryRecord], today: dt.date) -> StatsSummary:
    records = list(records)
    done = [r for r in records if r.completed]
    counts = Counter(r.program for r in done)
    return StatsSummary(
        total_sessions=len(records),
        completed_sessions=len(done),
        total_active_seconds=sum((r.active_seconds for r in done), Decimal("0.0")),
        per_program_counts=dict(sorted(counts.items())),
        current_streak_days=streak_days((r.date for r in done), today),
    )
