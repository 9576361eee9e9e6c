"""Exhaustive search for the entropy-optimal GTBR inside an STBR envelope.

Candidates ``(r, B)`` satisfy

* ``sum(r) == N * r_s`` and ``0 <= r_i <= B_s``,
* ``sum(B) == (N - 1) * B_s`` (equality mode) or ``<=`` (inequality mode),
* ``B_i`` inside the depth window ``[max(0, B_s - w), B_s + w]`` when ``w`` is set.

The search walks parameter sequences from the last slot backwards, so every
candidate sharing a suffix ``(r_k.., B_k..)`` shares the weight tables of
those stages.  A table for stage ``k`` is held as ``h_k`` with
``g_k(u) = h_k(u + r_k)``; picking ``r_k`` is therefore just an offset into
``h_k``.  Depths at or above the largest token count that can reach them
act identically, which the cache key exploits.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

from .entropy import log2_int, solve
from .errors import ResourceLimit
from .regulator import RegulatorSpec, StbrSpec

log = logging.getLogger(__name__)

EQUALITY = "equality"
INEQUALITY = "inequality"
AUTO = "auto"
DEFAULT_CACHE_SIZE = 1 << 16

CSV_COLUMNS = ("N", "r", "B", "r_star", "B_star", "H_s", "H_g", "inc_pct")


def default_window(horizon: int) -> int | None:
    return None if horizon <= 4 else 3


@dataclass(frozen=True)
class SearchProblem:
    envelope: StbrSpec
    depth_mode: str = EQUALITY
    window: int | None | str = AUTO
    max_candidates: int | None = None
    time_limit: float | None = None
    cache_size: int = DEFAULT_CACHE_SIZE

    def __post_init__(self) -> None:
        env = self.envelope
        if not 2 * env.rate <= env.depth <= 5 * env.rate:
            raise ValueError(
                f"envelope violates 2r <= B <= 5r: r={env.rate}, B={env.depth}"
            )
        if self.depth_mode not in (EQUALITY, INEQUALITY):
            raise ValueError(f"unknown depth mode {self.depth_mode!r}")
        if self.window == AUTO:
            object.__setattr__(self, "window", default_window(env.horizon))
        elif self.window is not None and self.window < 0:
            raise ValueError("depth window must be non-negative")

    @property
    def depth_range(self) -> tuple[int, int]:
        n, b = self.envelope.horizon, self.envelope.depth
        budget = (n - 1) * b
        if self.window is None:
            return 0, budget
        return max(0, b - self.window), min(b + self.window, budget)


@dataclass
class SearchStats:
    candidates: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    elapsed: float = 0.0

    def merge(self, other: "SearchStats") -> None:
        self.candidates += other.candidates
        self.cache_hits += other.cache_hits
        self.cache_misses += other.cache_misses


@dataclass(frozen=True)
class SearchOutcome:
    envelope: StbrSpec
    depth_mode: str
    window: int | None
    best_weight: int
    optima: tuple[RegulatorSpec, ...]
    baseline_weight: int
    stats: SearchStats = field(compare=False)
    authoritative: bool = True

    @property
    def best_utility(self) -> float:
        return log2_int(self.best_weight)

    @property
    def baseline_utility(self) -> float:
        return log2_int(self.baseline_weight)

    @property
    def improvement(self) -> float:
        h_s = self.baseline_utility
        return 0.0 if h_s == 0 else (self.best_utility - h_s) / h_s * 100.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "envelope": self.envelope.to_dict(),
            "depth_mode": self.depth_mode,
            "window": self.window,
            "authoritative": self.authoritative,
            "H_s": self.baseline_utility,
            "g_s": str(self.baseline_weight),
            "H_g": self.best_utility,
            "g_g": str(self.best_weight),
            "inc_pct": self.improvement,
            "optima": [{"r": list(o.increments), "B": list(o.depths)} for o in self.optima],
            "stats": {
                "candidates": self.stats.candidates,
                "cache_hits": self.stats.cache_hits,
                "cache_misses": self.stats.cache_misses,
                "elapsed": self.stats.elapsed,
            },
        }

    def csv_rows(self) -> list[dict[str, str]]:
        env = self.envelope
        return [
            {
                "N": str(env.horizon),
                "r": str(env.rate),
                "B": str(env.depth),
                "r_star": " ".join(map(str, o.increments)),
                "B_star": " ".join(map(str, o.depths)),
                "H_s": f"{self.baseline_utility:.4f}",
                "H_g": f"{self.best_utility:.4f}",
                "inc_pct": f"{self.improvement:.2f}",
            }
            for o in self.optima
        ]


def write_csv(outcomes: Sequence[SearchOutcome], header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    if header:
        writer.writeheader()
    for outcome in outcomes:
        writer.writerows(outcome.csv_rows())
    return buf.getvalue()


def _compositions(total: int, parts: int, lo: int, hi: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(hi, total - lo * (parts - 1)), lo - 1, -1):
        if total - first > hi * (parts - 1):
            break
        for rest in _compositions(total - first, parts - 1, lo, hi):
            yield (first,) + rest


def _count_compositions(total: int, parts: int, lo: int, hi: int) -> int:
    ways = [1] + [0] * total
    for _ in range(parts):
        nxt = [0] * (total + 1)
        for s, c in enumerate(ways):
            if c:
                for v in range(lo, min(hi, total - s) + 1):
                    nxt[s + v] += c
        ways = nxt
    return ways[total]


def enumerate_increments(envelope: StbrSpec) -> Iterator[tuple[int, ...]]:
    """Token sequences summing to ``N*r`` with entries in ``[0, B]``, largest first."""
    return _compositions(envelope.horizon * envelope.rate, envelope.horizon, 0, envelope.depth)


def enumerate_depths(
    envelope: StbrSpec, depth_mode: str = EQUALITY, window: int | None = None
) -> Iterator[tuple[int, ...]]:
    problem = SearchProblem(envelope, depth_mode, window)
    lo, hi = problem.depth_range
    parts = envelope.horizon - 1
    budget = parts * envelope.depth
    if depth_mode == EQUALITY:
        yield from _compositions(budget, parts, lo, hi)
    else:
        for total in range(budget, -1, -1):
            yield from _compositions(total, parts, lo, hi)


def count_candidates(problem: SearchProblem) -> int:
    env = problem.envelope
    lo, hi = problem.depth_range
    parts = env.horizon - 1
    budget = parts * env.depth
    n_r = _count_compositions(env.horizon * env.rate, env.horizon, 0, env.depth)
    if problem.depth_mode == EQUALITY:
        n_b = _count_compositions(budget, parts, lo, hi)
    else:
        n_b = sum(_count_compositions(t, parts, lo, hi) for t in range(budget + 1))
    return n_r * n_b


def suffix_memo_key(r_suffix: Sequence[int], b_suffix: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return tuple(r_suffix), tuple(b_suffix)


class SuffixCache:
    """Bounded LRU map from suffix keys to stage tables."""

    def __init__(self, capacity: int = DEFAULT_CACHE_SIZE):
        self.capacity = capacity
        self.hits = 0
        self.misses = 0
        self._data: OrderedDict = OrderedDict()

    def get(self, key):
        table = self._data.get(key)
        if table is None:
            self.misses += 1
        else:
            self.hits += 1
            self._data.move_to_end(key)
        return table

    def put(self, key, table) -> None:
        self._data[key] = table
        if len(self._data) > self.capacity:
            self._data.popitem(last=False)


class _Timeout(Exception):
    pass


class _Walker:
    def __init__(self, problem: SearchProblem, deadline: float | None):
        env = problem.envelope
        self.n = env.horizon
        self.cap = env.depth
        self.tokens = env.horizon * env.rate
        self.budget = (env.horizon - 1) * env.depth
        self.lo, self.hi = problem.depth_range
        self.equality = problem.depth_mode == EQUALITY
        self.cache = SuffixCache(problem.cache_size)
        self.deadline = deadline
        self.best = 0
        self.optima: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        self.candidates = 0

    def run(self, top: Sequence[tuple[int, int | None]] | None = None) -> None:
        n = self.n
        h_last = [(2 << x) - 1 for x in range(self.tokens + 1)]
        if n == 1:
            if self.tokens <= self.cap:
                self.candidates += 1
                self._record(h_last[self.tokens], (self.tokens,), ())
            return
        for r_last in self._increment_choices(n - 1, self.tokens):
            left = self.tokens - r_last
            for b in self._depth_choices(n - 1, 0):
                if top is not None and (r_last, b) not in top:
                    continue
                self._descend(n - 1, h_last, r_last, left, b, (r_last,), (), (), 0)

    def branches(self) -> list[tuple[int, int]]:
        if self.n == 1:
            return []
        return [
            (r_last, b)
            for r_last in self._increment_choices(self.n - 1, self.tokens)
            for b in self._depth_choices(self.n - 1, 0)
        ]

    def _increment_choices(self, stage: int, left: int) -> range:
        # slots 0..stage-1 must absorb the remainder with at most `cap` each
        return range(min(self.cap, left), max(0, left - stage * self.cap) - 1, -1)

    def _depth_choices(self, stage: int, used: int) -> range:
        # choosing B_{stage-1}; B_0..B_{stage-2} remain
        rest = stage - 1
        hi = min(self.hi, self.budget - used - rest * self.lo)
        if stage == 1 and self.equality:
            last = self.budget - used
            return range(last, last - 1, -1) if self.lo <= last <= self.hi else range(0)
        lo = self.lo
        if self.equality:
            lo = max(lo, self.budget - used - rest * self.hi)
        return range(hi, lo - 1, -1)

    def _descend(self, stage, h, r_k, left, b, r_suffix, b_suffix, b_eff, used) -> None:
        # h tabulates h_stage over x in [0, left + r_k], so g_stage(u) = h[r_k + u].
        # Fix B_{stage-1} = b and fold into h_{stage-1} over x in [0, left].
        if stage == 1:
            self._leaves(h, r_k + left, r_suffix[1:], b_suffix, used, ((r_k, b),))
            return
        eff = min(b, left)
        b_eff = (eff,) + b_eff
        key = suffix_memo_key(r_suffix, b_eff)
        h_prev = self.cache.get(key)
        if h_prev is None:
            h_prev = []
            acc = 0
            for x in range(left + 1):
                acc = 2 * acc + h[r_k + (x if x < b else b)]
                h_prev.append(acc)
            self.cache.put(key, h_prev)
        stage -= 1
        b_suffix = (b,) + b_suffix
        used += b
        if stage == 1:
            self._leaves(h_prev, left, r_suffix, b_suffix, used)
            return
        for r_prev in self._increment_choices(stage, left):
            rest = left - r_prev
            for b_prev in self._depth_choices(stage, used):
                self._descend(stage, h_prev, r_prev, rest, b_prev, (r_prev,) + r_suffix, b_suffix, b_eff, used)

    def _leaves(self, h, left, r_suffix, b_suffix, used, pairs=None) -> None:
        # h is h_1 over [0, left]; every (r_1, B_0) completes a candidate with r_0 = left - r_1:
        # g_0(0) = sum_{x=0}^{r_0} 2**(r_0 - x) * h[r_1 + min(x, B_0)]
        if pairs is None:
            depths = self._depth_choices(1, used)
            pairs = [(r1, b0) for r1 in self._increment_choices(1, left) for b0 in depths]
        best = self.best
        for r1, b0 in pairs:
            r0 = left - r1
            m = r0 + 1 if r0 < b0 else b0
            acc = 0
            for x in range(r1, r1 + m):
                acc = 2 * acc + h[x]
            tail = r0 + 1 - m
            if tail:
                acc = (acc << tail) + h[r1 + b0] * ((1 << tail) - 1)
            if acc >= best:
                self._record(acc, (r0, r1) + r_suffix, (b0,) + b_suffix)
                best = self.best
        self.candidates += len(pairs)
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout

    def _record(self, weight: int, r: tuple[int, ...], b: tuple[int, ...]) -> None:
        if weight > self.best:
            self.best = weight
            self.optima = [(r, b)]
        elif weight == self.best:
            self.optima.append((r, b))


class SearchInterrupted(ResourceLimit):
    """Raised when a time cap stops the search; ``partial`` is non-authoritative."""

    def __init__(self, message: str, partial: SearchOutcome):
        super().__init__(message)
        self.partial = partial


def _run_branches(problem: SearchProblem, branches, deadline):
    walker = _Walker(problem, deadline)
    timed_out = False
    try:
        walker.run(set(branches) if branches is not None else None)
    except _Timeout:
        timed_out = True
    stats = SearchStats(walker.candidates, walker.cache.hits, walker.cache.misses)
    return walker.best, walker.optima, stats, timed_out


def search(problem: SearchProblem, jobs: int = 1) -> SearchOutcome:
    """Evaluate every candidate and return all parameter pairs tied at the maximum."""
    total = count_candidates(problem)
    if problem.max_candidates is not None and total > problem.max_candidates:
        raise ResourceLimit(f"{total} candidates exceed the cap of {problem.max_candidates}")
    start = time.monotonic()
    deadline = None if problem.time_limit is None else start + problem.time_limit
    env = problem.envelope
    log.info("searching %s: %d candidates, mode=%s, window=%s", env, total, problem.depth_mode, problem.window)

    if jobs <= 1:
        parts = [_run_branches(problem, None, deadline)]
    else:
        branches = _Walker(problem, None).branches()
        chunks = [branches[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_branches, [problem] * jobs, chunks, [deadline] * jobs))

    best = max(p[0] for p in parts)
    optima: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    stats = SearchStats()
    timed_out = False
    for weight, found, part_stats, cut in parts:
        stats.merge(part_stats)
        timed_out |= cut
        if weight == best:
            optima.extend(found)
    stats.elapsed = time.monotonic() - start
    optima.sort()
    outcome = SearchOutcome(
        envelope=env,
        depth_mode=problem.depth_mode,
        window=problem.window,
        best_weight=best,
        optima=tuple(RegulatorSpec(env.horizon, r, b) for r, b in optima),
        baseline_weight=solve(env.as_regulator()).utility_weight,
        stats=stats,
        authoritative=not timed_out,
    )
    if timed_out:
        raise SearchInterrupted(f"time limit of {problem.time_limit}s reached", outcome)
    return outcome
