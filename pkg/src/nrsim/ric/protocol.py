"""Line-oriented E2-like wire format between the gNB and the xApp.

One message per line, UTF-8, fields separated by ``|``, newline terminated.
Numbers are written with 6 significant digits; message constructors round
their float fields the same way so that decode(encode(m)) == m.

    IND|tti|window|policy|cell_tput|mean_delay|jain|n|<n x 6 per-UE fields>
        per-UE fields: ue_id|direction|tput_mbps|delay_ms|mean_mcs|tti_alloc_pct
    CTL|tti|policy
    ACK|tti|accepted(0/1)|effective_tti|policy
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

DELIMITER = "|"
UE_FIELDS = ("ue_id", "direction", "throughput_mbps", "mean_delay_ms", "mean_mcs", "tti_allocation_pct")
DIRECTION_NAMES = ("DL", "UL")


class E2ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, field: str | None = None):
        self.line = line
        self.field = field
        where = f"line {line}" + (f", field {field!r}" if field else "")
        super().__init__(f"{where}: {message}")


def q6(x: float) -> float:
    """Round to the 6 significant digits carried on the wire."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be sent")
    return float(f"{x:.6g}")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _check_name(name: str) -> str:
    if not name or DELIMITER in name or "\n" in name or "\r" in name:
        raise ValueError(f"invalid token {name!r}")
    return name


@dataclass(frozen=True)
class UeKpi:
    ue_id: int
    direction: str
    throughput_mbps: float
    mean_delay_ms: float
    mean_mcs: float
    tti_allocation_pct: float

    def __post_init__(self):
        if self.direction not in DIRECTION_NAMES:
            raise ValueError(f"direction must be DL or UL, got {self.direction!r}")
        for name in UE_FIELDS[2:]:
            object.__setattr__(self, name, q6(getattr(self, name)))


@dataclass(frozen=True)
class Indication:
    tti: int
    window: int
    policy: str
    cell_throughput_mbps: float
    mean_delay_ms: float
    jain: float
    ues: tuple[UeKpi, ...] = ()

    def __post_init__(self):
        _check_name(self.policy)
        for name in ("cell_throughput_mbps", "mean_delay_ms", "jain"):
            object.__setattr__(self, name, q6(getattr(self, name)))
        object.__setattr__(self, "ues", tuple(self.ues))

    @property
    def min_ue_throughput_mbps(self) -> float:
        return min((u.throughput_mbps for u in self.ues), default=0.0)

    @property
    def avg_ue_throughput_mbps(self) -> float:
        ids = {u.ue_id for u in self.ues}
        return self.cell_throughput_mbps / len(ids) if ids else 0.0


@dataclass(frozen=True)
class Control:
    tti: int
    policy: str

    def __post_init__(self):
        _check_name(self.policy)


@dataclass(frozen=True)
class Ack:
    tti: int
    accepted: bool
    effective_tti: int
    policy: str

    def __post_init__(self):
        _check_name(self.policy)


E2Message = Union[Indication, Control, Ack]

KPI_FIELDS = ("cell_throughput_mbps", "mean_delay_ms", "jain",
              "min_ue_throughput_mbps", "avg_ue_throughput_mbps")


def encode_message(msg: E2Message) -> bytes:
    if isinstance(msg, Indication):
        parts = ["IND", str(msg.tti), str(msg.window), msg.policy, _fmt(msg.cell_throughput_mbps),
                 _fmt(msg.mean_delay_ms), _fmt(msg.jain), str(len(msg.ues))]
        for u in msg.ues:
            parts += [str(u.ue_id), u.direction, _fmt(u.throughput_mbps), _fmt(u.mean_delay_ms),
                      _fmt(u.mean_mcs), _fmt(u.tti_allocation_pct)]
    elif isinstance(msg, Control):
        parts = ["CTL", str(msg.tti), msg.policy]
    elif isinstance(msg, Ack):
        parts = ["ACK", str(msg.tti), "1" if msg.accepted else "0", str(msg.effective_tti), msg.policy]
    else:
        raise TypeError(f"not an E2 message: {msg!r}")
    return (DELIMITER.join(parts) + "\n").encode("utf-8")


class _Fields:
    def __init__(self, parts: list[str], line: int):
        self.parts = parts
        self.pos = 0
        self.line = line

    def take(self, name: str) -> str:
        if self.pos >= len(self.parts):
            raise E2ParseError("message truncated", self.line, name)
        v = self.parts[self.pos]
        self.pos += 1
        return v

    def int(self, name: str) -> int:
        v = self.take(name)
        try:
            return int(v)
        except ValueError:
            raise E2ParseError(f"expected integer, got {v!r}", self.line, name) from None

    def float(self, name: str) -> float:
        v = self.take(name)
        try:
            x = float(v)
        except ValueError:
            raise E2ParseError(f"expected number, got {v!r}", self.line, name) from None
        if not math.isfinite(x):
            raise E2ParseError(f"non-finite number {v!r}", self.line, name)
        return x

    def name(self, name: str) -> str:
        v = self.take(name)
        if not v:
            raise E2ParseError("empty token", self.line, name)
        return v

    def end(self) -> None:
        if self.pos != len(self.parts):
            raise E2ParseError(f"{len(self.parts) - self.pos} unexpected trailing field(s)", self.line,
                               f"#{self.pos}")


def decode_message(data: bytes | str, line: int = 1) -> E2Message:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise E2ParseError(f"invalid UTF-8: {e}", line) from None
    else:
        text = data
    if not text.endswith("\n"):
        raise E2ParseError("missing newline terminator (truncated line)", line)
    text = text[:-1]
    if "\n" in text:
        raise E2ParseError("more than one message in buffer", line)
    f = _Fields(text.split(DELIMITER), line)
    kind = f.take("kind")
    try:
        if kind == "IND":
            tti, window, policy = f.int("tti"), f.int("window"), f.name("policy")
            cell, dly, jain = f.float("cell_throughput_mbps"), f.float("mean_delay_ms"), f.float("jain")
            n = f.int("n_ues")
            if n < 0:
                raise E2ParseError("negative UE count", line, "n_ues")
            ues = []
            for _ in range(n):
                ue_id = f.int("ue_id")
                direction = f.take("direction")
                if direction not in DIRECTION_NAMES:
                    raise E2ParseError(f"bad direction {direction!r}", line, "direction")
                ues.append(UeKpi(ue_id, direction, f.float("throughput_mbps"), f.float("mean_delay_ms"),
                                 f.float("mean_mcs"), f.float("tti_allocation_pct")))
            f.end()
            return Indication(tti, window, policy, cell, dly, jain, tuple(ues))
        if kind == "CTL":
            tti, policy = f.int("tti"), f.name("policy")
            f.end()
            return Control(tti, policy)
        if kind == "ACK":
            tti = f.int("tti")
            flag = f.take("accepted")
            if flag not in ("0", "1"):
                raise E2ParseError(f"accepted flag must be 0 or 1, got {flag!r}", line, "accepted")
            eff, policy = f.int("effective_tti"), f.name("policy")
            f.end()
            return Ack(tti, flag == "1", eff, policy)
    except E2ParseError:
        raise
    except ValueError as e:
        raise E2ParseError(str(e), line) from None
    raise E2ParseError(f"unknown message kind {kind!r}", line, "kind")


def decode_stream(data: bytes) -> Iterator[E2Message]:
    """Decode every complete line of ``data``; a trailing partial line is an error."""
    lines = data.split(b"\n")
    tail = lines.pop()
    for i, raw in enumerate(lines, start=1):
        yield decode_message(raw + b"\n", line=i)
    if tail:
        raise E2ParseError("message truncated", len(lines) + 1)
