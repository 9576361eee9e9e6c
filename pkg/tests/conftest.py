from __future__ import annotations

import random
from collections import defaultdict

import pytest

from gtbr.optimizer import SearchProblem, search
from gtbr.reference import TABLE
from gtbr.regulator import RegulatorSpec, StbrSpec

CORPUS_SEED = 20240917
CORPUS_SIZE = 200


def make_corpus(seed: int = CORPUS_SEED, size: int = CORPUS_SIZE) -> list[RegulatorSpec]:
    """Fixed corpus of small regulators: N <= 4, total tokens <= 10, depths in [0, 8]."""
    rng = random.Random(seed)
    specs = []
    while len(specs) < size:
        n = rng.randint(1, 4)
        total = rng.randint(0, 10)
        cuts = sorted(rng.randint(0, total) for _ in range(n - 1))
        r = [b - a for a, b in zip([0] + cuts, cuts + [total])]
        depths = [rng.randint(0, 8) for _ in range(n - 1)]
        specs.append(RegulatorSpec(n, tuple(r), tuple(depths)))
    return specs


@pytest.fixture(scope="session")
def corpus() -> list[RegulatorSpec]:
    return make_corpus()


@pytest.fixture(scope="session")
def table_outcomes():
    """Equality-mode search for every published envelope, computed once."""
    return {row.envelope: search(SearchProblem(StbrSpec(*row.envelope))) for row in TABLE}


# One pass/fail line per acceptance criterion in the terminal summary.
_criteria: dict[int, str] = {}
_results: dict[int, list[bool]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    _criteria[number] = title
    _results[number].append(report.passed or report.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        runs = _results[number]
        status = "PASS" if all(runs) else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {status}  {_criteria[number]}  ({sum(runs)}/{len(runs)} checks passed)"
        )
