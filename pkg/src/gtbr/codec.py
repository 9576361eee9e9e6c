"""Carry a payload in packet lengths and packet contents.

The sender runs an arithmetic decoder over the payload: the payload bits,
zero padded to the capacity ``n``, are read as a binary fraction ``x`` in
``[0, 1)``.  In each slot the subinterval for packet length ``l`` has the
optimal probability ``p_k(l | u)`` (covert bits), and inside it the next
``l`` bits of the rescaled code point become the packet contents (overt
bits).  Intervals are exact: their denominators are the integer weights
``g_k(u)``, so no register renormalization or rounding is needed.

Across a whole frame the outcome is one of ``g_0(0)`` equally likely
(schedule, contents) pairs.  ``K`` chained frames are one symbol of
``g_0(0) ** K`` outcomes and carry ``n = floor(K * log2 g_0(0))`` bits, so
the rate approaches the information utility as frames are chained.

Wire format (all integers big-endian)::

    u16  payload length in bits
    then, for every slot of every frame in order:
    u16  packet length l in bits
    ceil(l / 8) bytes of packet contents, MSB first, zero padded

Frame boundaries are implied by the regulator horizon.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Sequence

from .entropy import EntropySolution
from .errors import PayloadExhausted
from .regulator import Schedule, evolve

MAX_PAYLOAD_BITS = 0xFFFF


@dataclass(frozen=True)
class Frame:
    """One regulator horizon: the packet schedule and each packet's bits."""

    schedule: Schedule
    packets: tuple[str, ...]

    @property
    def overt_bits(self) -> int:
        return self.schedule.overt_bits


@dataclass(frozen=True)
class CodecFrame:
    """An encoded payload: the length header plus one or more frames."""

    payload_length: int
    capacity: int
    frames: tuple[Frame, ...]

    @property
    def padding(self) -> int:
        return self.capacity - self.payload_length

    @property
    def overt_bits(self) -> int:
        return sum(f.overt_bits for f in self.frames)

    @property
    def covert_bits(self) -> int:
        return self.capacity - self.overt_bits

    @property
    def bits_per_frame(self) -> float:
        return self.payload_length / len(self.frames)

    def to_bytes(self) -> bytes:
        out = bytearray(struct.pack(">H", self.payload_length))
        for frame in self.frames:
            for bits in frame.packets:
                out += struct.pack(">H", len(bits))
                if bits:
                    nbytes = (len(bits) + 7) // 8
                    out += (int(bits, 2) << (8 * nbytes - len(bits))).to_bytes(nbytes, "big")
        return bytes(out)


def parse_wire(data: bytes, horizon: int) -> tuple[int, list[list[str]]]:
    """Split wire bytes into the payload length and per-frame packet bitstrings."""
    if len(data) < 2:
        raise ValueError("truncated header")
    (payload_length,) = struct.unpack_from(">H", data, 0)
    pos = 2
    packets: list[str] = []
    while pos < len(data):
        if pos + 2 > len(data):
            raise ValueError("truncated packet length")
        (length,) = struct.unpack_from(">H", data, pos)
        pos += 2
        nbytes = (length + 7) // 8
        if pos + nbytes > len(data):
            raise ValueError("truncated packet contents")
        value = int.from_bytes(data[pos : pos + nbytes], "big") >> (8 * nbytes - length)
        packets.append(format(value, f"0{length}b") if length else "")
        pos += nbytes
    if len(packets) % horizon:
        raise ValueError(f"{len(packets)} packets do not fill frames of {horizon} slots")
    return payload_length, [packets[i : i + horizon] for i in range(0, len(packets), horizon)]


def from_bytes(solution: EntropySolution, data: bytes) -> CodecFrame:
    payload_length, grouped = parse_wire(data, solution.spec.horizon)
    frames = tuple(_frame(solution, p) for p in grouped)
    return CodecFrame(payload_length, capacity(solution, len(frames)), frames)


def _frame(solution: EntropySolution, packets: Sequence[str]) -> Frame:
    schedule = evolve(solution.spec, [len(p) for p in packets])
    return Frame(schedule, tuple(packets))


def capacity(solution: EntropySolution, frames: int = 1) -> int:
    """Payload bits that ``frames`` chained frames can carry."""
    return (solution.utility_weight**frames).bit_length() - 1


def _check_bits(payload: str) -> None:
    if payload.strip("01"):
        raise ValueError("payload must be a string of '0' and '1'")
    if len(payload) > MAX_PAYLOAD_BITS:
        raise ValueError(f"payload longer than {MAX_PAYLOAD_BITS} bits")


def _unrank(solution: EntropySolution, value: int) -> Frame:
    spec = solution.spec
    weights = solution.weights
    n = spec.horizon
    u = 0
    lengths = []
    packets = []
    for k in range(n):
        nxt = weights[k + 1]
        top = u + spec.increments[k]
        for length in range(top + 1):
            v = top - length
            if k < n - 1 and v > spec.depths[k]:
                v = spec.depths[k]
            below = nxt[v]
            block = below << length
            if value < block:
                contents, value = divmod(value, below)
                break
            value -= block
        else:
            raise ValueError("value exceeds the frame's outcome count")
        lengths.append(length)
        packets.append(format(contents, f"0{length}b") if length else "")
        u = v
    return Frame(evolve(spec, lengths), tuple(packets))


def _rank(solution: EntropySolution, frame: Frame) -> int:
    spec = solution.spec
    weights = solution.weights
    n = spec.horizon
    sched = evolve(spec, [len(p) for p in frame.packets])
    value = 0
    for k, (length, u, bits) in enumerate(zip(sched.lengths, sched.states, frame.packets)):
        nxt = weights[k + 1]
        top = u + spec.increments[k]
        for shorter in range(length):
            v = top - shorter
            if k < n - 1 and v > spec.depths[k]:
                v = spec.depths[k]
            value += nxt[v] << shorter
        value += (int(bits, 2) if bits else 0) * nxt[sched.states[k + 1]]
    return value


def _frames_for(solution: EntropySolution, point: int, bits: int, count: int) -> tuple[Frame, ...]:
    g = solution.utility_weight
    symbol = (point * g**count) >> bits
    digits = []
    for _ in range(count):
        symbol, d = divmod(symbol, g)
        digits.append(d)
    return tuple(_unrank(solution, d) for d in reversed(digits))


def _encode(solution: EntropySolution, payload: str, count: int) -> CodecFrame:
    bits = capacity(solution, count)
    point = int(payload.ljust(bits, "0"), 2) if bits else 0
    return CodecFrame(len(payload), bits, _frames_for(solution, point, bits, count))


def encode(solution: EntropySolution, payload: str, *, pad: bool = True) -> CodecFrame:
    """Encode as much of ``payload`` as one frame carries.

    Short payloads are zero padded unless ``pad`` is false, in which case
    PayloadExhausted is raised.  Bits beyond the capacity are not consumed;
    ``payload_length`` of the result says how many were.
    """
    _check_bits(payload)
    bits = capacity(solution)
    if len(payload) < bits and not pad:
        raise PayloadExhausted(f"payload has {len(payload)} bits, frame carries {bits}")
    return _encode(solution, payload[:bits], 1)


def frames_needed(solution: EntropySolution, bits: int) -> int:
    g = solution.utility_weight
    if bits and g == 1:
        raise PayloadExhausted("regulator admits a single schedule and carries no information")
    count = 1
    while capacity(solution, count) < bits:
        count += 1
    return count


def encode_chain(solution: EntropySolution, payload: str) -> CodecFrame:
    """Encode the whole payload over as few chained frames as possible."""
    _check_bits(payload)
    return _encode(solution, payload, frames_needed(solution, len(payload)))


def _point(solution: EntropySolution, frames: Sequence[Frame]) -> tuple[int, int]:
    g = solution.utility_weight
    symbol = 0
    for frame in frames:
        symbol = symbol * g + _rank(solution, frame)
    bits = capacity(solution, len(frames))
    total = g ** len(frames)
    # smallest code point inside [symbol / total, (symbol + 1) / total)
    point = -((-symbol << bits) // total)
    if point >> bits or point * total >= (symbol + 1) << bits:
        raise ValueError("frames do not correspond to any payload")
    return point, bits


def decode(solution: EntropySolution, coded: CodecFrame) -> str:
    point, bits = _point(solution, coded.frames)
    if coded.payload_length > bits:
        raise ValueError(f"header claims {coded.payload_length} bits, frames carry {bits}")
    return (format(point, f"0{bits}b") if bits else "")[: coded.payload_length]


def _contents(lengths: Sequence[int]) -> Iterator[tuple[str, ...]]:
    # lexicographic over (c_0, c_1, ...), which is ascending frame rank
    if not lengths:
        yield ()
        return
    head = lengths[0]
    for c in range(1 << head):
        for rest in _contents(lengths[1:]):
            yield (format(c, f"0{head}b") if head else "",) + rest


def decode_lengths(solution: EntropySolution, lengths: Sequence[int], *, attempts: int = 1 << 16) -> str:
    """A payload whose single-frame encoding has exactly these packet lengths.

    Used for schedules that were sampled rather than encoded: the packet
    contents are unknown, so the lowest-ranked contents that form a valid
    codeword are chosen.
    """
    evolve(solution.spec, lengths)
    for tried, packets in enumerate(_contents(list(lengths))):
        if tried >= attempts:
            break
        frame = Frame(evolve(solution.spec, lengths), packets)
        try:
            point, bits = _point(solution, (frame,))
        except ValueError:
            continue
        return format(point, f"0{bits}b") if bits else ""
    raise ValueError(f"no codeword with lengths {tuple(lengths)} within {attempts} attempts")
