"""Exact maximum flow entropy of a regulator by backward induction.

The optimal entropy ``H_k(u)`` of the remaining flow from slot ``k`` with
``u`` residual tokens is carried as the integer weight ``g_k(u) = 2**H_k(u)``:

    g_N(u) = 1
    g_k(u) = sum_{l=0}^{u+r_k} 2**l * g_{k+1}(min(u + r_k - l, B_k))

No clamp applies in the last slot.  All weights are exact Python integers;
``g_k(u)`` counts the conforming (schedule, packet contents) pairs from
stage ``k`` onwards, so the optimal length law at a stage is

    p_k(l | u) = 2**l * g_{k+1}(next state) / g_k(u)

and the information utility of the regulator is ``log2 g_0(0)``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterator, Mapping, Sequence

from .errors import EnumerationTooLarge, ResourceLimit, StateOutOfRange
from .regulator import RegulatorSpec, Schedule, evolve, step

DEFAULT_MAX_ENTRIES = 2_000_000
DEFAULT_MAX_BITS = 1 << 20
DEFAULT_ORACLE_LIMIT = 10**7


def log2_int(x: int) -> float:
    """log2 of a positive integer of any size.

    Uses the bit length for the integer part and the top 64 bits for the
    fraction, so the relative error stays below 1e-15.
    """
    if x <= 0:
        raise ValueError("log2 of a non-positive integer")
    n = x.bit_length()
    if n <= 64:
        return math.log2(x)
    shift = n - 64
    return shift + math.log2(x >> shift)


def stage_state_bounds(spec: RegulatorSpec) -> list[int]:
    """Largest tabulated state for stages ``0..N``."""
    n = spec.horizon
    bounds = [0] + [spec.depths[k - 1] for k in range(1, n)]
    bounds.append((spec.depths[-1] if n > 1 else 0) + spec.increments[-1])
    return bounds


def _next_stage(row: Sequence[int], increment: int, depth: int | None, size: int) -> list[int]:
    # g_k(u) = h(u + r_k) with h(x) = 2 h(x - 1) + g_{k+1}(min(x, B_k)).
    out = []
    acc = 0
    for x in range(size + increment):
        acc = 2 * acc + row[x if depth is None or x < depth else depth]
        if x >= increment:
            out.append(acc)
    return out


@dataclass(frozen=True)
class StagePmf:
    """Optimal packet-length law at ``(stage, state)`` as exact rationals.

    ``numerators[l] / denominator`` is the probability of a packet of ``l`` bits.
    """

    stage: int
    state: int
    numerators: tuple[int, ...]
    denominator: int

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(n, self.denominator) for n in self.numerators)

    def __len__(self) -> int:
        return len(self.numerators)


@dataclass(frozen=True)
class EntropySolution:
    spec: RegulatorSpec
    weights: tuple[tuple[int, ...], ...]

    @property
    def utility_weight(self) -> int:
        return self.weights[0][0]

    def weight(self, stage: int, state: int) -> int:
        if not 0 <= stage <= self.spec.horizon:
            raise StateOutOfRange(f"stage {stage} outside [0, {self.spec.horizon}]")
        row = self.weights[stage]
        if not 0 <= state < len(row):
            raise StateOutOfRange(f"state {state} not tabulated at stage {stage} (max {len(row) - 1})")
        return row[state]

    def entropy(self, stage: int, state: int) -> float:
        return log2_int(self.weight(stage, state))

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "weights": [[str(w) for w in row] for row in self.weights],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EntropySolution":
        spec = RegulatorSpec.from_dict(data["spec"])
        weights = tuple(tuple(int(w) for w in row) for row in data["weights"])
        return cls(spec, weights)


def solve(
    spec: RegulatorSpec,
    *,
    max_entries: int = DEFAULT_MAX_ENTRIES,
    max_bits: int = DEFAULT_MAX_BITS,
) -> EntropySolution:
    n = spec.horizon
    bounds = stage_state_bounds(spec)
    entries = sum(b + 1 for b in bounds)
    if entries > max_entries:
        raise ResourceLimit(f"weight table needs {entries} entries (cap {max_entries})")

    rows: list[list[int]] = [[1] * (bounds[n] + 1)]
    for k in range(n - 1, -1, -1):
        depth = spec.depths[k] if k < n - 1 else None
        row = _next_stage(rows[-1], spec.increments[k], depth, bounds[k] + 1)
        if row[-1].bit_length() > max_bits:
            raise ResourceLimit(f"weight at stage {k} exceeds {max_bits} bits")
        rows.append(row)
    rows.reverse()
    return EntropySolution(spec, tuple(tuple(r) for r in rows))


def information_utility(solution: EntropySolution) -> float:
    return log2_int(solution.utility_weight)


def _successor(spec: RegulatorSpec, stage: int, state: int, length: int) -> int:
    left = state + spec.increments[stage] - length
    if stage < spec.horizon - 1:
        left = min(left, spec.depths[stage])
    return left


def optimal_pmf(solution: EntropySolution, stage: int, state: int) -> StagePmf:
    spec = solution.spec
    if not 0 <= stage < spec.horizon:
        raise StateOutOfRange(f"stage {stage} outside [0, {spec.horizon - 1}]")
    denominator = solution.weight(stage, state)
    top = state + spec.increments[stage]
    nxt = solution.weights[stage + 1]
    numerators = tuple(
        (1 << length) * nxt[_successor(spec, stage, state, length)] for length in range(top + 1)
    )
    return StagePmf(stage, state, numerators, denominator)


def per_schedule_information(solution: EntropySolution, lengths: Sequence[int] | Schedule) -> float:
    """Overt plus covert bits carried by one schedule under the optimal law."""
    if isinstance(lengths, Schedule):
        lengths = lengths.lengths
    sched = evolve(solution.spec, lengths)
    total = 0.0
    for k, (length, u) in enumerate(zip(sched.lengths, sched.states)):
        pmf = optimal_pmf(solution, k, u)
        total += length + log2_int(pmf.denominator) - log2_int(pmf.numerators[length])
    return total


def oracle_utility(spec: RegulatorSpec, *, limit: int = DEFAULT_ORACLE_LIMIT) -> tuple[int, float]:
    """Brute force: sum ``2**sum(l)`` over every conforming schedule.

    Independent of :func:`solve`; walks the schedule tree with the
    regulator's own token update.
    """
    n = spec.horizon
    visited = 0
    total = 0
    stack = [(0, 0, 0)]  # (slot, tokens, bits so far)
    while stack:
        slot, tokens, bits = stack.pop()
        if slot == n:
            visited += 1
            if visited > limit:
                raise EnumerationTooLarge(f"more than {limit} conforming schedules")
            total += 1 << bits
            continue
        for length in range(tokens + spec.increments[slot] + 1):
            stack.append((slot + 1, step(spec, slot, tokens, length), bits + length))
    return total, log2_int(total)


def _draw(pmf: StagePmf, rng: random.Random) -> int:
    point = rng.randrange(pmf.denominator)
    for length, weight in enumerate(pmf.numerators):
        if point < weight:
            return length
        point -= weight
    raise AssertionError("pmf numerators do not sum to the denominator")


def sample_schedules(solution: EntropySolution, count: int, seed: int | None = None) -> Iterator[Schedule]:
    """Draw ``count`` independent schedules from the optimal law."""
    rng = random.Random(seed)
    spec = solution.spec
    pmfs: dict[tuple[int, int], StagePmf] = {}
    for _ in range(count):
        u = 0
        lengths = []
        for k in range(spec.horizon):
            pmf = pmfs.get((k, u))
            if pmf is None:
                pmf = pmfs[(k, u)] = optimal_pmf(solution, k, u)
            length = _draw(pmf, rng)
            lengths.append(length)
            u = _successor(spec, k, u, length)
        yield evolve(spec, lengths)


def sample_schedule(solution: EntropySolution, seed: int | None = None) -> Schedule:
    return next(sample_schedules(solution, 1, seed))


def estimate_utility(solution: EntropySolution, count: int, seed: int | None = None) -> tuple[float, float]:
    """Monte Carlo mean of per-schedule information and its standard error."""
    cache: dict[tuple[int, ...], float] = {}
    values = []
    for sched in sample_schedules(solution, count, seed):
        v = cache.get(sched.lengths)
        if v is None:
            v = cache[sched.lengths] = per_schedule_information(solution, sched.lengths)
        values.append(v)
    mean = math.fsum(values) / count
    if count < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (count - 1)
    return mean, math.sqrt(var / count)


def plugin_entropy(schedules: Sequence[Schedule]) -> float:
    """Mean overt bits plus the empirical entropy of the observed length sequences.

    Unlike the per-schedule score, this depends on how often each schedule
    was drawn, so it checks the sampler itself.  Biased low by roughly
    ``(outcomes - 1) / (2 n ln 2)`` bits.
    """
    counts: dict[tuple[int, ...], int] = {}
    overt = 0
    for sched in schedules:
        counts[sched.lengths] = counts.get(sched.lengths, 0) + 1
        overt += sched.overt_bits
    n = sum(counts.values())
    covert = -math.fsum(c / n * math.log2(c / n) for c in counts.values())
    return overt / n + covert
