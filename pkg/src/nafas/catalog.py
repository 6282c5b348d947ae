"""Built-in breathing programs, level specs, and the custom-program loader.

All ratios and units are held as integer hundredths so that every derived
duration is an exact number of milliseconds.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Mapping


class CatalogError(Exception):
    pass


class UnknownProgram(CatalogError):
    def __init__(self, program_id: str):
        super().__init__(f"unknown program: {program_id!r}")
        self.program_id = program_id


class UnknownLevel(CatalogError, ValueError):
    def __init__(self, text: str):
        super().__init__(f"unknown level: {text!r}")
        self.text = text


class ParseError(CatalogError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class ValidationError(CatalogError):
    def __init__(self, program_id: str, violations: list[str]):
        super().__init__(f"invalid program {program_id!r}: " + "; ".join(violations))
        self.program_id = program_id
        self.violations = violations


class DuplicateId(CatalogError):
    def __init__(self, program_id: str):
        super().__init__(f"duplicate program id: {program_id!r}")
        self.program_id = program_id


class Level(enum.Enum):
    BEGINNER = "beginner"
    MEDIUM = "medium"
    ADVANCED = "advanced"

    @property
    def letter(self) -> str:
        return self.value[0].upper()

    @classmethod
    def parse(cls, text: str) -> "Level":
        key = text.strip().lower()
        for level in cls:
            if key in (level.value, level.value[0]):
                return level
        raise UnknownLevel(text)


class Source(enum.Enum):
    BUILTIN = "builtin"
    CUSTOM = "custom"


def to_centis(value: Decimal | int | str) -> int:
    """Convert a decimal quantity to integer hundredths, refusing to round."""
    try:
        d = Decimal(value) if not isinstance(value, Decimal) else value
    except InvalidOperation:
        raise ValueError(f"not a number: {value!r}") from None
    if not d.is_finite():
        raise ValueError(f"not a finite number: {value!r}")
    scaled = d * 100
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{value} has more than two decimal places")
    return int(scaled)


def format_centis(centis: int) -> str:
    whole, frac = divmod(centis, 100)
    if frac == 0:
        return str(whole)
    return f"{whole}.{frac:02d}".rstrip("0")


@dataclass(frozen=True)
class LevelSpec:
    """Timing for one level. Ratios and unit are integer hundredths."""

    inhale_ratio: int
    retain_ratio: int
    exhale_ratio: int
    sustain_ratio: int
    unit_seconds: int
    cycles: int

    @classmethod
    def of(cls, ratios: str, unit: str | int | Decimal, cycles: int) -> "LevelSpec":
        """Build from table notation, e.g. ``LevelSpec.of("2:1.1:2.2:0.8", 2, 23)``."""
        parts = ratios.split(":")
        if len(parts) != 4:
            raise ValueError(f"expected I:R:E:S, got {ratios!r}")
        i, r, e, s = (to_centis(p) for p in parts)
        return cls(i, r, e, s, to_centis(str(unit)), cycles)

    @property
    def ratios(self) -> tuple[int, int, int, int]:
        return (self.inhale_ratio, self.retain_ratio, self.exhale_ratio, self.sustain_ratio)

    @property
    def ratio_sum(self) -> int:
        return sum(self.ratios)

    def ratio_text(self) -> str:
        return ":".join(format_centis(c) for c in self.ratios)

    def unit_text(self) -> str:
        return format_centis(self.unit_seconds)


_RATIO_NAMES = ("inhale_ratio", "retain_ratio", "exhale_ratio", "sustain_ratio")


def validate_spec(spec: LevelSpec) -> list[str]:
    """Return every violated invariant; an empty list means the spec is valid."""
    violations = []
    for name in _RATIO_NAMES + ("unit_seconds",):
        value = getattr(spec, name)
        if isinstance(value, bool) or not isinstance(value, int):
            violations.append(f"{name} must be an integer number of hundredths")
    if not isinstance(spec.cycles, int) or isinstance(spec.cycles, bool):
        violations.append("cycles must be an integer")
    if violations:
        return violations

    for name in _RATIO_NAMES:
        if getattr(spec, name) < 0:
            violations.append(f"{name} must be ≥ 0")
    if spec.inhale_ratio <= 0:
        violations.append("inhale_ratio must be > 0")
    if spec.exhale_ratio <= 0:
        violations.append("exhale_ratio must be > 0")
    if spec.unit_seconds <= 0:
        violations.append("unit_seconds must be > 0")
    if spec.cycles < 1:
        violations.append("cycles must be ≥ 1")
    # hundredths x hundredths is 0.1 ms resolution; phases must land on whole ms
    if spec.unit_seconds > 0:
        for name in _RATIO_NAMES:
            value = getattr(spec, name)
            if value > 0 and (value * spec.unit_seconds) % 10:
                violations.append(f"{name} × unit_seconds must be a whole number of milliseconds")
    return violations


@dataclass(frozen=True)
class Program:
    id: str
    name: str
    description: str
    specs: Mapping[Level, LevelSpec]
    source: Source = Source.BUILTIN
    source_note: str = ""

    def spec(self, level: Level) -> LevelSpec:
        return self.specs[level]


def _builtin(pid, name, description, note, rows) -> Program:
    specs = {level: LevelSpec.of(*row) for level, row in zip(Level, rows)}
    return Program(pid, name, description, specs, Source.BUILTIN, note)


# Rows are (I:R:E:S, unit seconds, cycles) for beginner, medium, advanced.
BUILTIN_PROGRAMS: tuple[Program, ...] = (
    _builtin(
        "clear-mind", "Clear Mind",
        "Short routine for clearing mental fog and sharpening focus during a coding break.",
        "albul_2014_prana",
        [("1:0:3:0", 3, 35), ("1:0:4:0", 3, 28), ("1:0:5:0", 3, 24)],
    ),
    _builtin(
        "relax1", "Relax1",
        "Calms the nerves after an intense stretch of work.",
        "albul_2014_prana",
        [("1:0:2:2", 3, 28), ("1:0:2:3", 3, 24), ("1:0:2:4", 3, 22)],
    ),
    _builtin(
        "relax2", "Relax2",
        "Deep-breathing relaxation for winding down at the end of a long session.",
        "weil_2014_dr",
        [("4:7:8:0", 1, 4), ("4:7:8:0", 1, 8), ("4:7:8:0", 1, 12)],
    ),
    _builtin(
        "relax3", "Relax3",
        "Long, slow exhales for stress relief and a meditative state.",
        "humangivensinstitute_2017_711",
        [("7:0:11:0", 1, 15), ("7:0:11:0", 1, 20), ("7:0:11:0", 1, 24)],
    ),
    _builtin(
        "calming1", "Calming1",
        "Even, soothing pattern that helps take the edge off anxiety.",
        "albul_2014_prana",
        [("1:2:1:2", 3, 24), ("1:3:1:3", 3, 22), ("1:4:1:4", 3, 20)],
    ),
    _builtin(
        "calming2", "Calming2",
        "A longer calming routine for high-pressure moments.",
        "a2015_using",
        [("5:0:5:5", 1, 4), ("5:0:5:5", 1, 6), ("5:0:5:5", 1, 8)],
    ),
    _builtin(
        "power", "Power",
        "Energizing pattern for when fatigue sets in.",
        "albul_2014_prana",
        [("1:2:2:0", 3, 28), ("1:3:2:0", 3, 24), ("1:4:2:0", 3, 20)],
    ),
    _builtin(
        "harmony", "Harmony",
        "Balanced pattern for staying relaxed and concentrated.",
        "albul_2014_prana",
        [("1:3:2:1", 3, 20), ("1:4:2:1", 3, 18), ("1:5:2:1", 3, 16)],
    ),
    _builtin(
        "anti-stress", "Anti-Stress",
        "Quick stress relief, e.g. in the middle of a tough debugging session.",
        "albul_2014_prana",
        [("3:0:0.66:0", 3, 20), ("4:0:0.66:0", 3, 17), ("5:0:0.66:0", 3, 14)],
    ),
    _builtin(
        "anti-appetite", "Anti-Appetite",
        "Helps ride out cravings instead of reaching for a snack.",
        "albul_2014_prana",
        [("5:0:5:5", 1, 40), ("6:0:5:5", 1, 38), ("7:0:5:5", 1, 36)],
    ),
    _builtin(
        "cigarette-replace", "Cigarette Replace",
        "A mindful breathing break to take instead of a smoking break.",
        "albul_2014_prana",
        [("2:1.1:2.2:0.8", 2, 23), ("3:1.1:2.2:0.8", 2, 21), ("4:1.1:2.2:0.8", 2, 19)],
    ),
    _builtin(
        "decision-making", "Decision-Making",
        "Settles the mind before an important decision.",
        "mithustoroni_2019_this",
        [("5:2:7:0", 1, 6), ("5:2:7:0", 1, 10), ("5:2:7:0", 1, 14)],
    ),
    _builtin(
        "balancing", "Balancing",
        "Brief grounding exercise for a hectic day.",
        "burgin_2020_pranayama",
        [("6:0:6:0", 1, 6), ("8:1:8:1", 1, 8), ("6:2:6:2", 1, 10)],
    ),
)


class Catalog:
    """Immutable, ordered collection of programs: built-ins first, then customs."""

    def __init__(self, custom: Iterable[Program] = ()):
        programs = list(BUILTIN_PROGRAMS) + list(custom)
        self._programs = tuple(programs)
        self._by_id = {}
        for program in programs:
            if program.id in self._by_id:
                raise DuplicateId(program.id)
            self._by_id[program.id] = program

    @classmethod
    def load(cls, path: str | Path | None, required: bool = False) -> "Catalog":
        """Catalog with custom programs read from ``path``.

        A missing file is only an error when ``required`` is set (the path was
        given explicitly rather than being the default location).
        """
        if path is None:
            return cls()
        path = Path(path)
        if not path.exists():
            if required:
                raise ParseError(f"programs file not found: {path}")
            return cls()
        return cls(load_custom_programs(path.read_text(encoding="utf-8")))

    def list_programs(self) -> list[Program]:
        return list(self._programs)

    def ids(self) -> list[str]:
        return [p.id for p in self._programs]

    def get(self, program_id: str) -> Program:
        try:
            return self._by_id[program_id]
        except KeyError:
            raise UnknownProgram(program_id) from None

    def get_spec(self, program_id: str, level: Level | str) -> LevelSpec:
        if isinstance(level, str):
            level = Level.parse(level)
        return self.get(program_id).spec(level)

    def __iter__(self):
        return iter(self._programs)

    def __len__(self) -> int:
        return len(self._programs)

    def __contains__(self, program_id: object) -> bool:
        return program_id in self._by_id


_LEVEL_KEYS = {"inhale", "retain", "exhale", "sustain", "unit", "cycles"}


def _number(value, where: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, Decimal)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if integer:
        if not isinstance(value, int):
            raise ParseError(f"{where}: expected an integer, got {value}")
        return value
    try:
        return to_centis(value)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _string(entry: dict, key: str, where: str) -> str:
    value = entry.get(key)
    if not isinstance(value, str):
        raise ParseError(f"{where}: {key!r} must be a string")
    return value


def load_custom_programs(document: str, reserved_ids: Iterable[str] | None = None) -> list[Program]:
    """Parse a custom-program JSON document.

    Either every program in the document is returned, or an exception is
    raised; a partial list is never produced.
    """
    if reserved_ids is None:
        reserved_ids = [p.id for p in BUILTIN_PROGRAMS]
    taken = set(reserved_ids)
    try:
        data = json.loads(document, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, list):
        raise ParseError("top level must be an array of programs")

    programs = []
    for index, entry in enumerate(data):
        where = f"program #{index}"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected an object")
        pid = _string(entry, "id", where)
        where = f"program {pid!r}"
        name = _string(entry, "name", where)
        description = _string(entry, "description", where)
        levels = entry.get("levels")
        if not isinstance(levels, dict):
            raise ParseError(f"{where}: 'levels' must be an object")
        extra = set(levels) - {lv.value for lv in Level}
        if extra:
            raise ParseError(f"{where}: unknown level key(s) {sorted(extra)}")

        specs = {}
        violations = []
        for level in Level:
            block = levels.get(level.value)
            if not isinstance(block, dict):
                raise ParseError(f"{where}: missing level block {level.value!r}")
            keys = set(block)
            if keys != _LEVEL_KEYS:
                missing, unknown = _LEVEL_KEYS - keys, keys - _LEVEL_KEYS
                raise ParseError(
                    f"{where}/{level.value}: missing {sorted(missing)} unknown {sorted(unknown)}"
                )
            lw = f"{where}/{level.value}"
            spec = LevelSpec(
                inhale_ratio=_number(block["inhale"], f"{lw}.inhale"),
                retain_ratio=_number(block["retain"], f"{lw}.retain"),
                exhale_ratio=_number(block["exhale"], f"{lw}.exhale"),
                sustain_ratio=_number(block["sustain"], f"{lw}.sustain"),
                unit_seconds=_number(block["unit"], f"{lw}.unit"),
                cycles=_number(block["cycles"], f"{lw}.cycles", integer=True),
            )
            violations += [f"{level.value}: {v}" for v in validate_spec(spec)]
            specs[level] = spec
        if violations:
            raise ValidationError(pid, violations)
        if pid in taken:
            raise DuplicateId(pid)
        taken.add(pid)
        programs.append(Program(pid, name, description, specs, Source.CUSTOM))
    return programs
