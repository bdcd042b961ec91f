"""Instruction streams and their per-tick switching activity.

A Workload pairs an instruction kind with a deterministic operand stream.
Leakage-relevant behavior is summarized by four normalized components:

    hd_a  mean Hamming distance between an op's input and output
    hd_b  mean Hamming distance between consecutive outputs
    hd_c  mean Hamming distance between consecutive inputs
    hw    mean Hamming weight of outputs

The power model consumes hd_b/hd_c/hw; hd_a is tracked because several
workloads vary it alongside the others and the null effect is worth testing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable


class WorkloadError(ValueError):
    """Invalid workload construction or operand-stream mismatch."""


class InstructionKind:
    """Canonical instruction-kind names shared with preset energy tables."""

    STR = "str"
    AES = "aes"
    ROR = "ror"
    LSL = "lsl"
    LSR = "lsr"
    AND = "and"
    ADD = "add"
    FADD = "fadd"
    MUL = "mul"
    FMUL = "fmul"
    DIV = "div"
    FDIV = "fdiv"

    ALL = (STR, AES, ROR, LSL, LSR, AND, ADD, FADD, MUL, FMUL, DIV, FDIV)


# Issue-port counts per kind, Firestorm-like: simple integer ALU ops issue on
# six ports, FP on four, the rest on two. Multiplies base energy only.
DEFAULT_LANES = {
    InstructionKind.STR: 2,
    InstructionKind.AES: 2,
    InstructionKind.ROR: 6,
    InstructionKind.LSL: 6,
    InstructionKind.LSR: 6,
    InstructionKind.AND: 6,
    InstructionKind.ADD: 6,
    InstructionKind.FADD: 4,
    InstructionKind.MUL: 2,
    InstructionKind.FMUL: 4,
    InstructionKind.DIV: 2,
    InstructionKind.FDIV: 2,
}


def hamming_weight(value: int) -> int:
    """Number of set bits."""
    if value < 0:
        raise WorkloadError("hamming_weight expects a non-negative value")
    return value.bit_count()


def hamming_distance(a: int, b: int, width: int | None = None) -> int:
    """Number of differing bits; both values must fit the stated width."""
    if a < 0 or b < 0:
        raise WorkloadError("hamming_distance expects non-negative values")
    if width is not None:
        if a >> width or b >> width:
            raise WorkloadError(f"operand does not fit in {width} bits")
    return (a ^ b).bit_count()


def _ror(value: int, shift: int, width: int) -> int:
    mask = (1 << width) - 1
    shift %= width
    return ((value >> shift) | (value << (width - shift))) & mask


@dataclass(frozen=True)
class OperandStream:
    """Deterministic per-tick (input, output) operand pairs.

    `pair(t)` must be pure and O(1) in t so streams can be sampled at any
    tick without replay.
    """

    width: int
    pair: Callable[[int], tuple[int, int]]
    name: str = "stream"

    def __post_init__(self):
        if self.width not in (32, 64):
            raise WorkloadError("operand width must be 32 or 64")

    def checked_pair(self, t: int) -> tuple[int, int]:
        a, b = self.pair(t)
        limit = 1 << self.width
        if not (0 <= a < limit and 0 <= b < limit):
            raise WorkloadError(f"{self.name}: generated value exceeds {self.width} bits")
        return a, b


@dataclass(frozen=True)
class ActivityFactor:
    """Normalized per-tick switching summary driving dynamic power."""

    base: float
    hd_a: float
    hd_b: float
    hd_c: float
    hw: float

    def __post_init__(self):
        for name in ("base", "hd_a", "hd_b", "hd_c", "hw"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise WorkloadError(f"ActivityFactor.{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class Workload:
    """An instruction kind driven by an operand stream on `parallelism` lanes."""

    kind: str
    operands: OperandStream
    parallelism: int = 1
    ops_per_frame: float | None = None  # render-loop work size, ops per frame

    def __post_init__(self):
        if self.kind not in InstructionKind.ALL:
            raise WorkloadError(f"unknown instruction kind {self.kind!r}")
        if self.parallelism < 1:
            raise WorkloadError("parallelism must be >= 1")
        if self.ops_per_frame is not None and self.ops_per_frame <= 0:
            raise WorkloadError("ops_per_frame must be > 0")

    @property
    def description(self) -> str:
        return f"{self.kind}:{self.operands.name}"


def decompose_components(w: Workload, ticks: int) -> ActivityFactor:
    """Average the stream's normalized HD components and output HW over `ticks`.

    Simulates the operand stream tick by tick; equivalent to (and tested
    against) a direct XOR-popcount average.
    """
    if ticks < 2:
        raise WorkloadError("need at least 2 ticks to form consecutive pairs")
    width = w.operands.width
    sum_a = sum_b = sum_c = sum_w = 0
    prev_in = prev_out = None
    for t in range(ticks):
        cur_in, cur_out = w.operands.checked_pair(t)
        sum_a += (cur_in ^ cur_out).bit_count()
        sum_w += cur_out.bit_count()
        if prev_in is not None:
            sum_b += (cur_out ^ prev_out).bit_count()
            sum_c += (cur_in ^ prev_in).bit_count()
        prev_in, prev_out = cur_in, cur_out
    pairs = ticks - 1
    return ActivityFactor(
        base=1.0,
        hd_a=sum_a / (ticks * width),
        hd_b=sum_b / (pairs * width),
        hd_c=sum_c / (pairs * width),
        hw=sum_w / (ticks * width),
    )


@dataclass(frozen=True)
class PixelColor:
    """8-bit RGB pixel; white has Hamming weight 24, black 0."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for name in ("r", "g", "b"):
            v = getattr(self, name)
            if not 0 <= v <= 255:
                raise WorkloadError(f"pixel channel {name}={v} outside 0..255")

    @property
    def hamming_weight(self) -> int:
        return self.r.bit_count() + self.g.bit_count() + self.b.bit_count()

    def packed(self) -> int:
        return (self.r << 16) | (self.g << 8) | self.b


BLACK = PixelColor(0, 0, 0)
WHITE = PixelColor(255, 255, 255)


# ---------------------------------------------------------------------------
# workload builders
# ---------------------------------------------------------------------------

def instruction_workload(kind: str, seed: int = 0, lanes: int | None = None) -> Workload:
    """Spin loop of one instruction on a fixed random mid-HW operand.

    Input equals output every tick, so all HD components are zero and the
    preset's per-instruction energy dominates. This is the workload used for
    instruction surveys and cooling studies.
    """
    rng = random.Random(("survey", kind, seed))
    value = rng.getrandbits(64)
    name = f"survey[seed={seed}]"
    stream = OperandStream(64, lambda t, v=value: (v, v), name=name)
    if lanes is None:
        lanes = DEFAULT_LANES[kind]
    return Workload(kind=kind, operands=stream, parallelism=lanes)


def ror_isolation(shift: int) -> Workload:
    """Rotate a fixed two-block constant: hd_a = 4*shift/64, hd_b = hd_c = 0."""
    if not 0 <= shift <= 16:
        raise WorkloadError("shift must lie in 0..16")
    x = 0x0000FFFF0000FFFF
    out = _ror(x, shift, 64)
    stream = OperandStream(64, lambda t: (x, out), name=f"ror-iso[s={shift}]")
    return Workload(kind=InstructionKind.ROR, operands=stream, parallelism=6)


def shift_pair_b(shift: int) -> Workload:
    """Alternate lsl/lsr over complementary halves to drive consecutive-output HD.

    hd_a = 2*shift/64, hd_c = 1.0 and hd_b = (64 - 4*shift)/64, sweeping the
    consecutive-output component across its full range as shift runs 0..16.
    """
    if not 0 <= shift <= 16:
        raise WorkloadError("shift must lie in 0..16")
    mask = (1 << 64) - 1
    x8 = 0x00000000FFFFFFFF
    x11 = 0xFFFFFFFF00000000
    lo = (x8 << shift) & mask
    hi = x11 >> shift

    def pair(t):
        return (x8, lo) if t % 2 == 0 else (x11, hi)

    stream = OperandStream(64, pair, name=f"shift-b[s={shift}]")
    return Workload(kind=InstructionKind.LSL, operands=stream, parallelism=6)


def shift_pair_c(shift: int) -> Workload:
    """Alternate pre-shifted inputs that restore one constant output.

    hd_b = 0, hd_c = 4*shift/64, hd_a = 2*shift/64: isolates the
    consecutive-input component.
    """
    if not 0 <= shift <= 16:
        raise WorkloadError("shift must lie in 0..16")
    mask = (1 << 64) - 1
    v = 0x0000FFFFFFFF0000
    a = v >> shift
    b = (v << shift) & mask

    def pair(t):
        return (a, v) if t % 2 == 0 else (b, v)

    stream = OperandStream(64, pair, name=f"shift-c[s={shift}]")
    return Workload(kind=InstructionKind.LSL, operands=stream, parallelism=6)


def ror_inplace(shift: int) -> Workload:
    """Rotate a register in place: hd_a = hd_b = hd_c = 4*shift/64.

    Feeding each output back as the next input makes the consecutive-input
    and consecutive-output components move together, which is what
    demonstrates their additive effect.
    """
    if not 0 <= shift <= 16:
        raise WorkloadError("shift must lie in 0..16")
    x0 = 0x0000FFFF0000FFFF

    def pair(t):
        cur = _ror(x0, (shift * t) % 64, 64)
        nxt = _ror(cur, shift, 64)
        return cur, nxt

    stream = OperandStream(64, pair, name=f"ror-inplace[s={shift}]")
    return Workload(kind=InstructionKind.ROR, operands=stream, parallelism=6)


def and_hw_workload(hw: int) -> Workload:
    """Bitwise-and of a value with itself, bits set from the LSB up.

    Pure Hamming-weight stimulus on a 64-bit ALU; all HD components are zero.
    """
    if not 0 <= hw <= 64:
        raise WorkloadError("hw must lie in 0..64")
    v = (1 << hw) - 1
    stream = OperandStream(64, lambda t: (v, v), name=f"and-hw[hw={hw}]")
    return Workload(kind=InstructionKind.AND, operands=stream, parallelism=6)


def add_stream(delta: int) -> Workload:
    """`val = val + delta` spin loop; delta 1 flips carry-chain bits, delta 0 none."""
    if delta not in (0, 1):
        raise WorkloadError("delta must be 0 or 1")
    mask = (1 << 64) - 1
    if delta == 0:
        stream = OperandStream(64, lambda t: (0, 0), name="add-0")
    else:
        stream = OperandStream(64, lambda t: (t & mask, (t + 1) & mask), name="add-1")
    return Workload(kind=InstructionKind.ADD, operands=stream, parallelism=6)


def build_shift_kernel(shift: int) -> Workload:
    """GPU kernel shifting 0x0000FFFF left then right by `shift` per element.

    The two ops together flip 4*shift bits between their inputs and outputs;
    hd_b and hd_c each average 2*shift/32.
    """
    if not 0 <= shift <= 16:
        raise WorkloadError("shift must lie in 0..16")
    m32 = (1 << 32) - 1
    v = 0x0000FFFF
    shifted = (v << shift) & m32

    def pair(t):
        return (v, shifted) if t % 2 == 0 else (shifted, v)

    stream = OperandStream(32, pair, name=f"gpu-shift[s={shift}]")
    return Workload(
        kind=InstructionKind.LSL,
        operands=stream,
        parallelism=DEFAULT_LANES[InstructionKind.LSL],
    )


def build_and_kernel(hw: int) -> Workload:
    """GPU kernel and-ing a vector whose elements carry `hw` set bits of 32."""
    if not 0 <= hw <= 32:
        raise WorkloadError("hw must lie in 0..32")
    v = (1 << hw) - 1
    stream = OperandStream(32, lambda t: (v, v), name=f"gpu-and[hw={hw}]")
    return Workload(
        kind=InstructionKind.AND,
        operands=stream,
        parallelism=DEFAULT_LANES[InstructionKind.AND],
    )


def build_filter_workload(pixel: PixelColor, intensity: float) -> Workload:
    """Filter-stack load whose switching activity scales with pixel HW.

    The stream alternates the packed pixel with zero, so hd_b, hd_c and hw
    all scale linearly with the pixel's Hamming weight: 24 set bits (white)
    give maximal pixel-driven activity, black gives none. `intensity` is the
    per-frame op count the render loop divides by frequency.
    """
    if intensity <= 0:
        raise WorkloadError("intensity must be > 0")
    v = pixel.packed()

    def pair(t):
        return (v, v) if t % 2 == 0 else (0, 0)

    name = f"filter[{pixel.r:02x}{pixel.g:02x}{pixel.b:02x}]"
    stream = OperandStream(32, pair, name=name)
    return Workload(
        kind=InstructionKind.FMUL,
        operands=stream,
        parallelism=DEFAULT_LANES[InstructionKind.FMUL],
        ops_per_frame=intensity,
    )


# ---------------------------------------------------------------------------
# name-based registry (config files and CLI)
# ---------------------------------------------------------------------------

def _build_survey(params: dict) -> Workload:
    kind = params.get("kind")
    if kind is None:
        raise WorkloadError("survey workload needs kind=<instruction>")
    lanes = params.get("lanes")
    return instruction_workload(
        kind,
        seed=int(params.get("seed", 0)),
        lanes=int(lanes) if lanes is not None else None,
    )


def _shift_param(params: dict) -> int:
    if "shift" not in params:
        raise WorkloadError("this workload needs shift=<0..16>")
    return int(params["shift"])


def _hw_param(params: dict) -> int:
    if "hw" not in params:
        raise WorkloadError("this workload needs hw=<count>")
    return int(params["hw"])


def _build_filter(params: dict) -> Workload:
    pixel = PixelColor(
        int(params.get("r", 255)), int(params.get("g", 255)), int(params.get("b", 255))
    )
    return build_filter_workload(pixel, float(params.get("intensity", 2e7)))


_REGISTRY: dict[str, Callable[[dict], Workload]] = {
    "survey": _build_survey,
    "ror-isolate": lambda p: ror_isolation(_shift_param(p)),
    "shift-b": lambda p: shift_pair_b(_shift_param(p)),
    "shift-c": lambda p: shift_pair_c(_shift_param(p)),
    "ror-inplace": lambda p: ror_inplace(_shift_param(p)),
    "cpu-and": lambda p: and_hw_workload(_hw_param(p)),
    "add-stream": lambda p: add_stream(int(p.get("delta", 1))),
    "gpu-shift": lambda p: build_shift_kernel(_shift_param(p)),
    "gpu-and": lambda p: build_and_kernel(_hw_param(p)),
    "filter": _build_filter,
}


def workload_names() -> list[str]:
    return sorted(_REGISTRY) + sorted(InstructionKind.ALL)


def build_named(name: str, params: dict | None = None) -> Workload:
    """Build a workload from its registry name plus string/number params.

    Bare instruction kinds ("add", "fdiv", ...) resolve to survey workloads.
    """
    params = dict(params or {})
    if name in _REGISTRY:
        return _REGISTRY[name](params)
    if name in InstructionKind.ALL:
        params.setdefault("kind", name)
        return _build_survey(params)
    raise WorkloadError(f"unknown workload {name!r} (known: {', '.join(workload_names())})")
