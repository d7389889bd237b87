"""Slot schedulers: Round Robin, Max Throughput and Proportional Fair.

Allocation is symbol-level TDMA over the whole carrier: each granted data
symbol carries every PRB for a single UE. DL and UL symbol budgets are
scheduled independently, each with its own RR cursor and PF averages.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, NamedTuple, Sequence

from .frame import SlotFormat
from .traffic import Direction

PF_EPSILON = 1.0  # bits/TTI floor on the PF average rate
DEFAULT_PF_TIME_CONSTANT = 100


class PolicyKind(str, Enum):
    RR = "rr"
    MT = "mt"
    PF = "pf"


POLICY_NAMES = tuple(p.value for p in PolicyKind)


@dataclass(frozen=True)
class SchedPolicy:
    kind: PolicyKind = PolicyKind.RR
    pf_time_constant: float = DEFAULT_PF_TIME_CONSTANT

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.pf_time_constant < 1:
            raise ValueError("pf_time_constant must be >= 1 TTI")


@dataclass(slots=True)
class SchedulableUe:
    """Per-direction scheduling view of a UE.

    ``rate_bits`` is the transport block of one full-band symbol at the UE's
    MCS; ``pf_avg_rate`` is the PF exponential average in bits per TTI.
    """

    ue_id: int
    mcs: int
    rate_bits: int
    demand_symbols: int = 0
    backlog_bits: int = 0
    pf_avg_rate: float = PF_EPSILON


class Grant(NamedTuple):
    symbol_index: int
    ue_id: int
    direction: Direction
    mcs: int
    tb_bits: int


@dataclass
class SchedulerState:
    rr_cursor: dict = field(default_factory=lambda: {Direction.DL: None, Direction.UL: None})
    rr_owed: dict = field(default_factory=lambda: {Direction.DL: None, Direction.UL: None})

    def reset(self) -> None:
        for d in self.rr_cursor:
            self.rr_cursor[d] = None
            self.rr_owed[d] = None


@dataclass(frozen=True)
class Allocation:
    """Grants of one slot, stored as the UE id served on each DL/UL data symbol.

    ``links`` maps ue_id -> (mcs, tb_bits per symbol) and is shared by every
    allocation of a run.
    """

    tti: int
    slot_format: SlotFormat
    dl: tuple[int, ...]
    ul: tuple[int, ...]
    links: Mapping[int, tuple[int, int]]
    policy: str = ""

    @property
    def grants(self) -> list[Grant]:
        out = []
        for direction, ues, symbols in (
            (Direction.DL, self.dl, self.slot_format.dl_symbols()),
            (Direction.UL, self.ul, self.slot_format.ul_symbols()),
        ):
            for sym, ue_id in zip(symbols, ues):
                mcs, tb = self.links[ue_id]
                out.append(Grant(sym, ue_id, direction, mcs, tb))
        return out

    def symbols_for(self, direction: Direction) -> tuple[int, ...]:
        return self.dl if direction is Direction.DL else self.ul


def rr_allocate(ues: Sequence[SchedulableUe], n_symbols: int, cursor: int | None,
                owed: tuple[int, int] | None = None) -> tuple[list[int], int | None, tuple[int, int] | None]:
    """Cyclic service in ue_id order starting after ``cursor``.

    Each visit (a turn) grants the UE its demand. When the slot runs out
    mid-turn the UE is recorded in ``owed`` as (ue_id, symbols still due) and
    the next slot resumes that turn instead of starting a new one, so over
    time every backlogged UE gets the same number of turns. The cursor is the
    last UE whose turn finished. Returns (order, cursor, owed).
    """
    if n_symbols <= 0 or not ues:
        return [], cursor, owed
    ues = sorted(ues, key=lambda u: u.ue_id)
    start = 0
    if cursor is not None:
        start = next((i for i, u in enumerate(ues) if u.ue_id > cursor), 0)
    order: list[int] = []
    remaining = n_symbols
    n = len(ues)
    new_owed = None
    for k in range(n):
        if remaining == 0:
            break
        ue = ues[(start + k) % n]
        quota = ue.demand_symbols
        if k == 0 and owed is not None and owed[0] == ue.ue_id:
            quota = min(quota, owed[1])
        g = min(quota, remaining)
        order.extend([ue.ue_id] * g)
        remaining -= g
        if g == quota:
            cursor = ue.ue_id
        else:
            new_owed = (ue.ue_id, quota - g)
    return order, cursor, new_owed


def mt_allocate(ues: Sequence[SchedulableUe], n_symbols: int) -> list[int]:
    order: list[int] = []
    remaining = n_symbols
    for ue in sorted(ues, key=lambda u: (-u.mcs, u.ue_id)):
        if remaining <= 0:
            break
        g = min(ue.demand_symbols, remaining)
        order.extend([ue.ue_id] * g)
        remaining -= g
    return order


def pf_allocate(ues: Sequence[SchedulableUe], n_symbols: int,
                time_constant: float = DEFAULT_PF_TIME_CONSTANT) -> list[int]:
    """Symbol-by-symbol argmax of rate / average rate.

    Symbols already granted in this slot count towards a provisional average
    (avg + granted * rate / T), so priorities move as the slot fills up.
    """
    ues = sorted(ues, key=lambda u: u.ue_id)
    n = len(ues)
    rate = [u.rate_bits for u in ues]
    avg = [u.pf_avg_rate for u in ues]
    room = [u.demand_symbols for u in ues]
    step = [r / time_constant for r in rate]
    order: list[int] = []
    for _ in range(n_symbols):
        best = -1
        best_p = -1.0
        for i in range(n):
            if room[i] > 0:
                p = rate[i] / avg[i]
                if p > best_p:
                    best, best_p = i, p
        if best < 0:
            break
        room[best] -= 1
        avg[best] += step[best]
        order.append(ues[best].ue_id)
    return order


def pf_update_averages(ues: Sequence[SchedulableUe], served_bits: Mapping[int, int],
                       time_constant: float = DEFAULT_PF_TIME_CONSTANT) -> None:
    """EMA update for every listed UE, served or not; floored at PF_EPSILON."""
    if time_constant < 1:
        raise ValueError("time_constant must be >= 1")
    a = 1.0 / time_constant
    b = 1.0 - a
    for ue in ues:
        avg = b * ue.pf_avg_rate + a * served_bits.get(ue.ue_id, 0)
        ue.pf_avg_rate = avg if avg > PF_EPSILON else PF_EPSILON


def allocate_direction(policy: SchedPolicy, ues: Sequence[SchedulableUe], n_symbols: int,
                       state: SchedulerState, direction: Direction) -> list[int]:
    if not ues or n_symbols <= 0:
        return []
    kind = policy.kind
    if kind is PolicyKind.RR:
        order, state.rr_cursor[direction], state.rr_owed[direction] = rr_allocate(
            ues, n_symbols, state.rr_cursor[direction], state.rr_owed[direction])
        return order
    if kind is PolicyKind.MT:
        return mt_allocate(ues, n_symbols)
    return pf_allocate(ues, n_symbols, policy.pf_time_constant)


def allocate(policy: SchedPolicy, slot_format: SlotFormat, dl_ues: Sequence[SchedulableUe],
             ul_ues: Sequence[SchedulableUe], state: SchedulerState, tti: int = 0,
             links: Mapping[int, tuple[int, int]] | None = None) -> Allocation:
    """Schedule the DL and UL data symbols of one slot.

    Callers pass only eligible UEs (CQI > 0, non-empty backlog) with
    ``demand_symbols`` already set.
    """
    dl = allocate_direction(policy, dl_ues, slot_format.n_dl, state, Direction.DL)
    ul = allocate_direction(policy, ul_ues, slot_format.n_ul, state, Direction.UL)
    if links is None:
        links = {u.ue_id: (u.mcs, u.rate_bits) for u in (*dl_ues, *ul_ues)}
    return Allocation(tti, slot_format, tuple(dl), tuple(ul), links, policy.kind.value)
