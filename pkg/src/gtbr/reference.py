"""Published entropy-optimal regulators, used by the reproduction harness.

Utilities are in bits and rounded to two decimals, improvements to one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .optimizer import SearchOutcome

UTILITY_TOL = 0.005
IMPROVEMENT_TOL = 0.1


@dataclass(frozen=True)
class PublishedRow:
    envelope: tuple[int, int, int]
    optima: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    h_s: float
    h_g: float
    inc_pct: float


TABLE = (
    PublishedRow((4, 3, 6), (((6, 3, 3, 0), (6, 6, 6)),), 20.04, 20.92, 4.4),
    PublishedRow((4, 3, 9), (((8, 3, 1, 0), (8, 10, 9)), ((9, 2, 1, 0), (9, 10, 8))), 20.10, 21.44, 6.7),
    PublishedRow((4, 3, 12), (((12, 0, 0, 0), (12, 12, 12)),), 20.10, 21.56, 7.2),
    PublishedRow((4, 4, 8), (((8, 4, 4, 0), (8, 8, 8)),), 25.08, 26.04, 3.8),
    PublishedRow((4, 4, 10), (((9, 5, 2, 0), (9, 12, 9)),), 25.13, 26.39, 5.0),
    PublishedRow((4, 4, 12), (((11, 4, 1, 0), (11, 14, 11)),), 25.14, 26.59, 5.8),
    PublishedRow((4, 4, 16), (((16, 0, 0, 0), (16, 16, 16)),), 25.14, 26.70, 6.2),
    PublishedRow((4, 5, 10), (((10, 5, 5, 0), (10, 10, 10)),), 29.91, 30.92, 3.4),
    PublishedRow((4, 5, 12), (((11, 6, 3, 0), (11, 14, 11)),), 29.96, 31.24, 4.3),
    PublishedRow((4, 6, 12), (((11, 7, 6, 0), (11, 13, 12)), ((12, 7, 5, 0), (12, 13, 11))), 34.60, 35.66, 3.1),
    PublishedRow((5, 3, 6), (((6, 3, 3, 3, 0), (6, 6, 6, 6)),), 25.68, 26.57, 3.5),
    PublishedRow((5, 3, 9), (((8, 3, 3, 1, 0), (8, 10, 10, 8)),), 25.88, 27.33, 5.6),
    PublishedRow((5, 3, 12), (((11, 2, 2, 0, 0), (11, 13, 13, 11)),), 25.90, 27.59, 6.5),
    PublishedRow((5, 3, 15), (((15, 0, 0, 0, 0), (15, 15, 15, 15)),), 25.90, 27.64, 6.7),
    PublishedRow((6, 3, 6), (((6, 3, 3, 3, 3, 0), (6, 6, 6, 6, 6)),), 31.33, 32.23, 2.9),
)

BY_ENVELOPE = {row.envelope: row for row in TABLE}


def compare(outcome: SearchOutcome, row: PublishedRow) -> list[str]:
    """Mismatches between a search outcome and the published row (empty if none)."""
    problems = []
    found = tuple((o.increments, o.depths) for o in outcome.optima)
    if set(found) != set(row.optima):
        problems.append(f"optima {found} != published {row.optima}")
    for name, got, want, tol in (
        ("H_s", outcome.baseline_utility, row.h_s, UTILITY_TOL),
        ("H_g", outcome.best_utility, row.h_g, UTILITY_TOL),
        ("inc_pct", outcome.improvement, row.inc_pct, IMPROVEMENT_TOL),
    ):
        if abs(got - want) > tol:
            problems.append(f"{name} {got:.4f} differs from published {want} by more than {tol}")
    return problems
