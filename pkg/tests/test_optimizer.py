import csv
import io
import itertools

import pytest

from gtbr.entropy import oracle_utility, solve
from gtbr.errors import ResourceLimit
from gtbr.optimizer import (
    CSV_COLUMNS,
    EQUALITY,
    INEQUALITY,
    SearchInterrupted,
    SearchProblem,
    count_candidates,
    enumerate_depths,
    enumerate_increments,
    search,
    suffix_memo_key,
    write_csv,
)
from gtbr.reference import TABLE
from gtbr.regulator import RegulatorSpec, StbrSpec, validate_comparison


def brute_increments(env):
    return [
        r
        for r in itertools.product(range(env.depth + 1), repeat=env.horizon)
        if sum(r) == env.horizon * env.rate
    ]


def brute_depths(env, mode, window=None):
    budget = (env.horizon - 1) * env.depth
    lo, hi = (0, budget) if window is None else (max(0, env.depth - window), env.depth + window)
    keep = (lambda s: s == budget) if mode == EQUALITY else (lambda s: s <= budget)
    return [b for b in itertools.product(range(lo, hi + 1), repeat=env.horizon - 1) if keep(sum(b))]


def test_increment_count_4_3_6():
    seqs = list(enumerate_increments(StbrSpec(4, 3, 6)))
    assert len(seqs) == len(set(seqs)) == len(brute_increments(StbrSpec(4, 3, 6))) == 231
    assert (6, 3, 3, 0) in seqs and (3, 3, 3, 3) in seqs


def test_increments_largest_first():
    seqs = list(enumerate_increments(StbrSpec(4, 3, 12)))
    assert seqs[0] == (12, 0, 0, 0)
    assert seqs == sorted(seqs, reverse=True)


def test_increments_single_slot():
    assert list(enumerate_increments(StbrSpec(1, 5, 10))) == [(5,)]


@pytest.mark.parametrize("env", [StbrSpec(3, 2, 4), StbrSpec(4, 3, 9), StbrSpec(2, 3, 15)])
def test_increments_match_brute_force(env):
    assert sorted(enumerate_increments(env)) == sorted(brute_increments(env))


def test_depth_examples():
    depths = set(enumerate_depths(StbrSpec(4, 3, 6)))
    assert {(6, 6, 6), (8, 10, 0)} <= depths
    assert all(sum(b) == 18 for b in depths)
    windowed = set(enumerate_depths(StbrSpec(4, 3, 9), EQUALITY, 3))
    assert {(8, 10, 9), (9, 10, 8)} <= windowed
    assert list(enumerate_depths(StbrSpec(1, 3, 9))) == [()]


@pytest.mark.parametrize("mode", [EQUALITY, INEQUALITY])
@pytest.mark.parametrize("window", [None, 1, 3])
def test_depths_match_brute_force(mode, window):
    env = StbrSpec(4, 2, 5)
    assert sorted(enumerate_depths(env, mode, window)) == sorted(brute_depths(env, mode, window))


@pytest.mark.parametrize("mode", [EQUALITY, INEQUALITY])
def test_candidate_count(mode):
    env = StbrSpec(3, 2, 6)
    expected = len(brute_increments(env)) * len(brute_depths(env, mode))
    assert count_candidates(SearchProblem(env, mode)) == expected
    assert search(SearchProblem(env, mode)).stats.candidates == expected


def test_envelope_must_be_moderate():
    with pytest.raises(ValueError):
        SearchProblem(StbrSpec(4, 3, 16))
    with pytest.raises(ValueError):
        SearchProblem(StbrSpec(4, 3, 5))
    with pytest.raises(ValueError):
        SearchProblem(StbrSpec(4, 3, 6), depth_mode="sideways")


def test_default_window():
    assert SearchProblem(StbrSpec(4, 3, 6)).window is None
    assert SearchProblem(StbrSpec(5, 3, 6)).window == 3
    assert SearchProblem(StbrSpec(5, 3, 6), window=None).window is None


def naive_optima(env, mode):
    best, optima = 0, []
    for r in brute_increments(env):
        for b in brute_depths(env, mode):
            g = oracle_utility(RegulatorSpec(env.horizon, r, b))[0]
            if g > best:
                best, optima = g, [(r, b)]
            elif g == best:
                optima.append((r, b))
    return best, set(optima)


SMALL_ENVELOPES = [
    StbrSpec(1, 3, 6),
    StbrSpec(1, 0, 0),
    StbrSpec(2, 1, 3),
    StbrSpec(2, 2, 4),
    StbrSpec(2, 3, 9),
    StbrSpec(3, 1, 2),
    StbrSpec(3, 1, 5),
    StbrSpec(3, 2, 4),
    StbrSpec(3, 2, 7),
]


@pytest.mark.parametrize("mode", [EQUALITY, INEQUALITY])
@pytest.mark.parametrize("env", SMALL_ENVELOPES, ids=str)
def test_search_matches_naive_loop(env, mode):
    outcome = search(SearchProblem(env, mode))
    best, optima = naive_optima(env, mode)
    assert outcome.best_weight == best
    assert {(o.increments, o.depths) for o in outcome.optima} == optima


def test_single_slot_search():
    outcome = search(SearchProblem(StbrSpec(1, 1, 2)))
    assert [(o.increments, o.depths) for o in outcome.optima] == [((1,), ())]
    assert outcome.improvement == 0


def test_suffix_key_examples():
    a = RegulatorSpec.of([6, 3, 3, 0], [6, 6, 6])
    b = RegulatorSpec.of([5, 4, 3, 0], [7, 6, 6])
    assert suffix_memo_key(a.increments[2:], a.depths[2:]) == suffix_memo_key(b.increments[2:], b.depths[2:])
    assert solve(a).weights[2:] == solve(b).weights[2:]
    assert suffix_memo_key(a.increments, a.depths) == (a.increments, a.depths)


def test_search_4_3_6():
    outcome = search(SearchProblem(StbrSpec(4, 3, 6)))
    assert [(o.increments, o.depths) for o in outcome.optima] == [((6, 3, 3, 0), (6, 6, 6))]
    assert outcome.stats.cache_hits > 0
    assert outcome.best_weight == solve(outcome.optima[0]).utility_weight
    assert round(outcome.best_utility, 2) == 20.92
    assert round(outcome.improvement, 1) == 4.4


def test_search_deterministic_and_cache_independent():
    problem = SearchProblem(StbrSpec(4, 2, 6))
    first, second = search(problem), search(problem)
    assert first == second
    assert (first.stats.candidates, first.stats.cache_hits) == (second.stats.candidates, second.stats.cache_hits)
    tiny = search(SearchProblem(StbrSpec(4, 2, 6), cache_size=1))
    assert tiny == first


def test_parallel_search_matches_serial():
    problem = SearchProblem(StbrSpec(4, 3, 6))
    serial, parallel = search(problem), search(problem, jobs=2)
    assert parallel == serial
    assert parallel.stats.candidates == serial.stats.candidates


def test_candidate_cap():
    with pytest.raises(ResourceLimit):
        search(SearchProblem(StbrSpec(4, 3, 6), max_candidates=10))


def test_time_limit_returns_partial():
    with pytest.raises(SearchInterrupted) as err:
        search(SearchProblem(StbrSpec(5, 3, 9), time_limit=0.0))
    partial = err.value.partial
    assert not partial.authoritative
    assert partial.stats.candidates < count_candidates(SearchProblem(StbrSpec(5, 3, 9)))


def test_csv_and_json_reports():
    outcome = search(SearchProblem(StbrSpec(4, 3, 6)))
    rows = list(csv.DictReader(io.StringIO(write_csv([outcome]))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["r_star"] == "6 3 3 0" and rows[0]["B_star"] == "6 6 6"
    assert rows[0]["H_s"] == "20.0355" and rows[0]["inc_pct"] == "4.40"
    data = outcome.to_dict()
    assert data["optima"] == [{"r": [6, 3, 3, 0], "B": [6, 6, 6]}]
    assert int(data["g_g"]) == outcome.best_weight
    assert data["window"] is None and data["authoritative"] is True


def test_ties_emit_one_line_each(table_outcomes):
    rows = write_csv([table_outcomes[(4, 3, 9)]]).strip().splitlines()
    assert len(rows) == 3


@pytest.mark.parametrize("row", TABLE, ids=lambda row: str(row.envelope))
def test_optima_shape(table_outcomes, row):
    outcome = table_outcomes[row.envelope]
    _, _, depth = row.envelope
    for spec in outcome.optima:
        assert min(spec.depths) >= depth - 1
        assert list(spec.increments) == sorted(spec.increments, reverse=True)
        assert sum(spec.depths) == (spec.horizon - 1) * depth
        assert all(v.holds for v in validate_comparison(spec, StbrSpec(*row.envelope)))
