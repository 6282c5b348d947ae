"""Regenerate tests/golden/plan/*.json from `nafas plan --json` for every built-in variant.

Run only when the plan format changes on purpose; the test suite asserts the
committed files are reproduced byte for byte.
"""

import io
import sys
import tempfile
from pathlib import Path

from nafas.catalog import BUILTIN_PROGRAMS, Level
from nafas.cli import Environment, main

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden" / "plan"


def render(program_id: str, level: Level, home: str) -> str:
    out = io.StringIO()
    env = Environment(stdout=out, stderr=sys.stderr, env={"HOME": home}, interactive=False)
    code = main(["plan", "--program", program_id, "--level", level.value, "--json"], env)
    if code:
        raise SystemExit(f"plan {program_id} {level.value} exited {code}")
    return out.getvalue()


def main_() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as home:
        for program in BUILTIN_PROGRAMS:
            for level in Level:
                path = GOLDEN / f"{program.id}.{level.value}.json"
                path.write_text(render(program.id, level, home), encoding="utf-8")
                print(path.relative_to(GOLDEN.parent.parent.parent))


if __name__ == "__main__":
    main_()
