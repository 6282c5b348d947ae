"""Reference computations kept independent of the code under test.

Durations go through ``fractions.Fraction`` from the decimal strings as
printed in the program table; nothing here imports the planner.
"""

import datetime as dt
from fractions import Fraction

# (id, level, "I:R:E:S", unit seconds, cycles), transcribed row by row
TABLE_ROWS = [
    ("clear-mind", "beginner", "1:0:3:0", "3", 35),
    ("clear-mind", "medium", "1:0:4:0", "3", 28),
    ("clear-mind", "advanced", "1:0:5:0", "3", 24),
    ("relax1", "beginner", "1:0:2:2", "3", 28),
    ("relax1", "medium", "1:0:2:3", "3", 24),
    ("relax1", "advanced", "1:0:2:4", "3", 22),
    ("relax2", "beginner", "4:7:8:0", "1", 4),
    ("relax2", "medium", "4:7:8:0", "1", 8),
    ("relax2", "advanced", "4:7:8:0", "1", 12),
    ("relax3", "beginner", "7:0:11:0", "1", 15),
    ("relax3", "medium", "7:0:11:0", "1", 20),
    ("relax3", "advanced", "7:0:11:0", "1", 24),
    ("calming1", "beginner", "1:2:1:2", "3", 24),
    ("calming1", "medium", "1:3:1:3", "3", 22),
    ("calming1", "advanced", "1:4:1:4", "3", 20),
    ("calming2", "beginner", "5:0:5:5", "1", 4),
    ("calming2", "medium", "5:0:5:5", "1", 6),
    ("calming2", "advanced", "5:0:5:5", "1", 8),
    ("power", "beginner", "1:2:2:0", "3", 28),
    ("power", "medium", "1:3:2:0", "3", 24),
    ("power", "advanced", "1:4:2:0", "3", 20),
    ("harmony", "beginner", "1:3:2:1", "3", 20),
    ("harmony", "medium", "1:4:2:1", "3", 18),
    ("harmony", "advanced", "1:5:2:1", "3", 16),
    ("anti-stress", "beginner", "3:0:0.66:0", "3", 20),
    ("anti-stress", "medium", "4:0:0.66:0", "3", 17),
    ("anti-stress", "advanced", "5:0:0.66:0", "3", 14),
    ("anti-appetite", "beginner", "5:0:5:5", "1", 40),
    ("anti-appetite", "medium", "6:0:5:5", "1", 38),
    ("anti-appetite", "advanced", "7:0:5:5", "1", 36),
    ("cigarette-replace", "beginner", "2:1.1:2.2:0.8", "2", 23),
    ("cigarette-replace", "medium", "3:1.1:2.2:0.8", "2", 21),
    ("cigarette-replace", "advanced", "4:1.1:2.2:0.8", "2", 19),
    ("decision-making", "beginner", "5:2:7:0", "1", 6),
    ("decision-making", "medium", "5:2:7:0", "1", 10),
    ("decision-making", "advanced", "5:2:7:0", "1", 14),
    ("balancing", "beginner", "6:0:6:0", "1", 6),
    ("balancing", "medium", "8:1:8:1", "1", 8),
    ("balancing", "advanced", "6:2:6:2", "1", 10),
]

ROSTER = [
    "clear-mind", "relax1", "relax2", "relax3", "calming1", "calming2", "power",
    "harmony", "anti-stress", "anti-appetite", "cigarette-replace", "decision-making", "balancing",
]


def phase_ms_exact(ratio: str, unit: str) -> Fraction:
    return Fraction(ratio) * Fraction(unit) * 1000


def cycle_phases_ms(ratios: str, unit: str) -> list[Fraction]:
    """Nonzero phase durations of one cycle, in order, as exact rationals."""
    return [phase_ms_exact(r, unit) for r in ratios.split(":") if Fraction(r) != 0]


def active_total_ms(ratios: str, unit: str, cycles: int) -> Fraction:
    return cycles * sum(cycle_phases_ms(ratios, unit))


def streak_brute_force(dates: set, today: dt.date) -> int:
    """Largest k whose k-day window ending at the anchor is fully covered.

    The anchor is today, or yesterday when today has no session yet.
    """
    anchor = today if today in dates else today - dt.timedelta(days=1)
    best = 0
    for k in range(1, len(dates) + 1):
        window = {anchor - dt.timedelta(days=i) for i in range(k)}
        if window <= dates:
            best = k
    return best
