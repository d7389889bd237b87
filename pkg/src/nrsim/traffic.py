"""Demand profiles, packet arrivals and the per-UE byte queues that stand in
for the RLC buffer."""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

DEMAND_CLASSES = (1, 2, 3)
DEFAULT_PACKET_BYTES = 1000


class Direction(str, Enum):
    DL = "DL"
    UL = "UL"


DIRECTIONS = (Direction.DL, Direction.UL)


@dataclass(frozen=True)
class DemandProfile:
    symbols_per_slot: int
    direction_mix: float = 0.5  # DL share of the UE's offered traffic

    def __post_init__(self):
        if self.symbols_per_slot not in DEMAND_CLASSES:
            raise ValueError(f"demand class must be one of {DEMAND_CLASSES}, got {self.symbols_per_slot}")
        if not 0.0 <= self.direction_mix <= 1.0:
            raise ValueError("direction_mix must lie in [0, 1]")


def assign_demand_profiles(n_ues: int, direction_mix: float = 0.5) -> list[DemandProfile]:
    """Classes 1, 2, 3 handed out cyclically by UE id, so a UE's class is ue_id % 3 + 1."""
    if n_ues < 1:
        raise ValueError("need at least one UE")
    return [DemandProfile(ue_id % 3 + 1, direction_mix) for ue_id in range(n_ues)]


@dataclass(slots=True)
class Packet:
    id: int
    size_bytes: int
    t_created: float
    ue_id: int
    direction: Direction
    t_received: float | None = None

    @property
    def size_bits(self) -> int:
        return 8 * self.size_bytes


@dataclass
class UeQueue:
    """FIFO of packets; ``head_sent_bits`` of the head packet already went out.

    ``backlog_bits`` (bits still to transmit) is kept up to date incrementally.
    """

    pending: deque = field(default_factory=deque)
    bytes_pending: int = 0
    head_sent_bits: int = 0
    backlog_bits: int = 0
    enqueued_bits: int = 0
    delivered_bits: int = 0

    def push(self, packet: Packet) -> None:
        bits = 8 * packet.size_bytes
        self.pending.append(packet)
        self.bytes_pending += packet.size_bytes
        self.backlog_bits += bits
        self.enqueued_bits += bits

    def __len__(self) -> int:
        return len(self.pending)


def drain(queue: UeQueue, budget_bits: int, t_now: float) -> tuple[list[Packet], int]:
    """Spend a transport-block budget on the queue head-first.

    Whole packets leave in FIFO order and are stamped with ``t_now``. Budget
    left over after the last whole packet goes into the next one, which stays
    queued until a later TTI finishes it. Returns the delivered packets and the
    bits already sent of the (new) head packet.
    """
    if budget_bits < 0:
        raise ValueError("budget must be non-negative")
    delivered = []
    pending = queue.pending
    sent = 0
    while budget_bits > 0 and pending:
        head = pending[0]
        need = 8 * head.size_bytes - queue.head_sent_bits
        if budget_bits >= need:
            budget_bits -= need
            sent += need
            pending.popleft()
            queue.bytes_pending -= head.size_bytes
            queue.delivered_bits += 8 * head.size_bytes
            queue.head_sent_bits = 0
            head.t_received = t_now
            delivered.append(head)
        else:
            queue.head_sent_bits += budget_bits
            sent += budget_bits
            budget_bits = 0
    queue.backlog_bits -= sent
    return delivered, queue.head_sent_bits


@dataclass(frozen=True)
class TrafficMode:
    """``full_buffer`` or ``cbr``; ``rate_mbps`` is the per-direction rate at an even DL/UL mix."""

    kind: str = "full_buffer"
    rate_mbps: float = 0.0

    def __post_init__(self):
        if self.kind not in ("full_buffer", "cbr"):
            raise ValueError(f"unknown traffic mode {self.kind!r}")
        if self.rate_mbps < 0:
            raise ValueError("cbr rate must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "TrafficMode":
        """Accepts ``full_buffer``, ``cbr:8`` or ``cbr(8)``."""
        text = text.strip()
        if text == "full_buffer":
            return cls()
        if text.startswith("cbr"):
            rate = text[3:].strip(" :()")
            return cls("cbr", float(rate))
        raise ValueError(f"unknown traffic mode {text!r}")

    def __str__(self) -> str:
        return self.kind if self.kind == "full_buffer" else f"cbr({self.rate_mbps:g})"


class ArrivalProcess:
    """Packet source feeding one (UE, direction) queue.

    CBR credit grows by ``bits_per_tti`` each TTI starting from ``phase``
    (a fraction of one packet), and a packet is released every time the
    credit crosses a packet boundary. ``next_due`` is the first TTI at which
    a CBR source can release anything, so callers may skip it until then.
    """

    def __init__(self, ue_id: int, direction: Direction, mode: TrafficMode,
                 packet_bytes: int, slot_ms: float, ids: itertools.count, phase: float = 0.0,
                 share: float = 1.0):
        self.ue_id = ue_id
        self.direction = direction
        self.mode = mode
        self.full_buffer = mode.kind == "full_buffer"
        self.packet_bits = 8 * packet_bytes
        self.packet_bytes = packet_bytes
        self.slot_ms = slot_ms
        self._ids = ids
        # mbps * 1e6 bit/s * slot_ms * 1e-3 s
        self.bits_per_tti = mode.rate_mbps * 1e3 * slot_ms * share
        self._offset = phase * self.packet_bits
        self._emitted = 0
        self.next_due = 0 if self.full_buffer else self._due_after(0)

    def _due_after(self, emitted: int) -> float:
        if self.bits_per_tti <= 0:
            return math.inf
        need = (emitted + 1) * self.packet_bits - self._offset
        return max(0, math.ceil(need / self.bits_per_tti) - 1)

    def arrivals(self, tti: int, queue: UeQueue, threshold_bits: int) -> list[Packet]:
        t = tti * self.slot_ms
        out = []
        if self.full_buffer:
            backlog = queue.backlog_bits
            target = max(threshold_bits, 1)
            while backlog < target:
                out.append(Packet(next(self._ids), self.packet_bytes, t, self.ue_id, self.direction))
                backlog += self.packet_bits
            return out
        if tti < self.next_due:
            return out
        total = math.floor((self._offset + (tti + 1) * self.bits_per_tti) / self.packet_bits)
        for _ in range(total - self._emitted):
            out.append(Packet(next(self._ids), self.packet_bytes, t, self.ue_id, self.direction))
        self._emitted = max(total, self._emitted)
        self.next_due = max(tti + 1, self._due_after(self._emitted))
        return out


def generate_arrivals(tti: int, queue: UeQueue, source: ArrivalProcess, threshold_bits: int = 0) -> list[Packet]:
    """Draw this TTI's packets from ``source`` and enqueue them."""
    packets = source.arrivals(tti, queue, threshold_bits)
    for p in packets:
        queue.push(p)
    return packets
