"""Token bucket regulators in discrete time.

A generalized regulator over ``N`` slots has a token increment ``r[k]`` for
every slot and a bucket depth ``B[k]`` that caps the residual tokens carried
from slot ``k`` into slot ``k + 1``.  There is no cap after the final slot, so
``B`` has ``N - 1`` entries.  The standard regulator is the constant case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .errors import HorizonMismatch, NonConforming


def _as_counts(values: Iterable[int], what: str) -> tuple[int, ...]:
    out = []
    for v in values:
        if isinstance(v, bool) or int(v) != v or v < 0:
            raise ValueError(f"{what} must be non-negative integers, got {v!r}")
        out.append(int(v))
    return tuple(out)


@dataclass(frozen=True)
class RegulatorSpec:
    """A generalized token bucket regulator ``(N, r, B)``."""

    horizon: int
    increments: tuple[int, ...]
    depths: tuple[int, ...]

    def __post_init__(self) -> None:
        if isinstance(self.horizon, bool) or int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "increments", _as_counts(self.increments, "token increments"))
        object.__setattr__(self, "depths", _as_counts(self.depths, "bucket depths"))
        if len(self.increments) != self.horizon:
            raise ValueError(
                f"expected {self.horizon} token increments, got {len(self.increments)}"
            )
        if len(self.depths) != self.horizon - 1:
            raise ValueError(
                f"expected {self.horizon - 1} bucket depths, got {len(self.depths)}"
            )

    @classmethod
    def of(cls, increments: Sequence[int], depths: Sequence[int] = ()) -> "RegulatorSpec":
        return cls(len(increments), tuple(increments), tuple(depths))

    @property
    def total_tokens(self) -> int:
        return sum(self.increments)

    def is_standard(self) -> bool:
        return len(set(self.increments)) == 1 and len(set(self.depths)) <= 1

    def to_dict(self) -> dict[str, Any]:
        return {"N": self.horizon, "r": list(self.increments), "B": list(self.depths)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RegulatorSpec":
        return cls(int(data["N"]), tuple(data["r"]), tuple(data.get("B", ())))


@dataclass(frozen=True)
class StbrSpec:
    """A standard regulator: constant rate ``r`` and depth ``B`` over ``N`` slots."""

    horizon: int
    rate: int
    depth: int

    def __post_init__(self) -> None:
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        for name in ("rate", "depth"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    def as_regulator(self) -> RegulatorSpec:
        n = self.horizon
        return RegulatorSpec(n, (self.rate,) * n, (self.depth,) * (n - 1))

    def to_dict(self) -> dict[str, Any]:
        return {"N": self.horizon, "r": self.rate, "B": self.depth}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StbrSpec":
        return cls(int(data["N"]), int(data["r"]), int(data["B"]))


def spec_from_dict(data: Mapping[str, Any]) -> RegulatorSpec | StbrSpec:
    """Scalar ``r`` means an STBR, an array means a GTBR."""
    if isinstance(data.get("r"), (list, tuple)):
        return RegulatorSpec.from_dict(data)
    return StbrSpec.from_dict(data)


@dataclass(frozen=True)
class Schedule:
    """Packet lengths ``l[0..N-1]`` and the token states ``u[0..N]`` they induce."""

    lengths: tuple[int, ...]
    states: tuple[int, ...]

    @property
    def overt_bits(self) -> int:
        return sum(self.lengths)


def step(spec: RegulatorSpec, slot: int, tokens: int, length: int) -> int:
    """Residual tokens after sending ``length`` bits in ``slot`` holding ``tokens``.

    Raises NonConforming if the packet does not fit.
    """
    available = tokens + spec.increments[slot]
    if length < 0 or length > available:
        raise NonConforming(slot, available, length)
    left = available - length
    if slot < spec.horizon - 1:
        left = min(left, spec.depths[slot])
    return left


def evolve(spec: RegulatorSpec, lengths: Sequence[int]) -> Schedule:
    if len(lengths) != spec.horizon:
        raise ValueError(f"expected {spec.horizon} packet lengths, got {len(lengths)}")
    states = [0]
    for k, length in enumerate(lengths):
        states.append(step(spec, k, states[-1], int(length)))
    return Schedule(tuple(int(x) for x in lengths), tuple(states))


def conforms(spec: RegulatorSpec, lengths: Sequence[int]) -> bool:
    try:
        evolve(spec, lengths)
    except NonConforming:
        return False
    return True


@dataclass(frozen=True)
class ReachabilityProfile:
    """``phi[i]`` is the largest residual token count possible at the start of slot ``i``."""

    phi: tuple[int, ...]

    def reachable(self, stage: int, state: int) -> bool:
        return 0 <= state <= self.phi[stage]


def reachability(spec: RegulatorSpec) -> ReachabilityProfile:
    phi = [0]
    for i in range(1, spec.horizon):
        phi.append(min(phi[-1] + spec.increments[i - 1], spec.depths[i - 1]))
    return ReachabilityProfile(tuple(phi))


def binding_stages(spec: RegulatorSpec) -> list[int]:
    """Stages ``i >= 1`` where the cap ``B[i-1]`` truncates the maximal token count."""
    phi = reachability(spec).phi
    return [
        i
        for i in range(1, spec.horizon)
        if phi[i] == spec.depths[i - 1] < phi[i - 1] + spec.increments[i - 1]
    ]


@dataclass(frozen=True)
class Verdict:
    name: str
    holds: bool
    detail: str


# Constraint names, in reporting order.  The last one is an informational flag.
AGGREGATE_TOKENS = "aggregate_tokens"
AGGREGATE_DEPTH = "aggregate_depth"
DEPTH_RATIO = "depth_ratio"
INCREMENT_CAP = "increment_cap"
DEPTH_EQUALITY = "aggregate_depth_equality"


def validate_comparison(g: RegulatorSpec, s: StbrSpec) -> list[Verdict]:
    """Check a GTBR against the comparison constraints relative to an STBR envelope."""
    if g.horizon != s.horizon:
        raise HorizonMismatch(g.horizon, s.horizon)
    n, r, b = s.horizon, s.rate, s.depth
    tokens = sum(g.increments)
    depth = sum(g.depths)
    peak = max(g.increments)
    return [
        Verdict(AGGREGATE_TOKENS, tokens == n * r, f"sum r_i = {tokens}, N*r = {n * r}"),
        Verdict(AGGREGATE_DEPTH, depth <= (n - 1) * b, f"sum B_i = {depth} <= (N-1)*B = {(n - 1) * b}"),
        Verdict(DEPTH_RATIO, 2 * r <= b <= 5 * r, f"2r = {2 * r} <= B = {b} <= 5r = {5 * r}"),
        Verdict(INCREMENT_CAP, peak <= b, f"max r_i = {peak} <= B = {b}"),
        Verdict(DEPTH_EQUALITY, depth == (n - 1) * b, f"sum B_i = {depth}, (N-1)*B = {(n - 1) * b}"),
    ]


def satisfies_comparison(g: RegulatorSpec, s: StbrSpec, *, depth_equality: bool = False) -> bool:
    verdicts = {v.name: v.holds for v in validate_comparison(g, s)}
    ok = all(verdicts[name] for name in (AGGREGATE_TOKENS, AGGREGATE_DEPTH, DEPTH_RATIO, INCREMENT_CAP))
    return ok and (verdicts[DEPTH_EQUALITY] or not depth_equality)
