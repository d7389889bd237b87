"""Throughput, delay and fairness statistics over a measurement window."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from scipy.stats import spearmanr

from .traffic import DIRECTIONS, Direction


@dataclass(frozen=True, slots=True)
class PacketRecord:
    ue_id: int
    direction: Direction
    size_bits: int
    t_t: float  # creation / transmission-request time, ms
    t_r: float  # delivery time, ms

    def __post_init__(self):
        if self.t_r < self.t_t:
            raise ValueError(f"packet delivered before it was created ({self.t_r} < {self.t_t})")


@dataclass(frozen=True)
class MeasurementWindow:
    """TTIs [start_tti, end_tti) of a run; a packet counts if it was delivered inside."""

    start_tti: int
    end_tti: int
    slot_ms: float

    def __post_init__(self):
        if self.end_tti <= self.start_tti:
            raise ValueError("measurement window must contain at least one TTI")

    @property
    def n_ttis(self) -> int:
        return self.end_tti - self.start_tti

    @property
    def duration_ms(self) -> float:
        return self.n_ttis * self.slot_ms

    @property
    def t_start(self) -> float:
        return self.start_tti * self.slot_ms

    @property
    def t_end(self) -> float:
        return self.end_tti * self.slot_ms

    def contains(self, record: PacketRecord) -> bool:
        return self.t_start < record.t_r <= self.t_end


@dataclass
class ThroughputAccumulator:
    rx_bits_total: int = 0
    delivery_time_ms: float = 0.0

    def add(self, size_bits: int) -> None:
        self.rx_bits_total += size_bits

    @property
    def mbps(self) -> float:
        if self.delivery_time_ms <= 0:
            raise ValueError("delivery time must be positive")
        return self.rx_bits_total / (self.delivery_time_ms * 1e3)


@dataclass(frozen=True)
class UeStats:
    ue_id: int
    direction: Direction
    throughput_mbps: float
    mean_delay_ms: float
    mean_mcs: float
    tti_allocation_pct: float
    mean_symbols_per_alloc: float
    demand_class: int
    served: bool
    packets: int = 0


def throughput(records: Iterable[PacketRecord], window_ms: float) -> float:
    """Received bits over the delivery window, in Mbps (bits / ms / 1e3)."""
    if window_ms <= 0:
        raise ValueError(f"window must be positive, got {window_ms}")
    return sum(r.size_bits for r in records) / (window_ms * 1e3)


def delay(record: PacketRecord) -> float:
    if record.t_r < record.t_t:
        raise ValueError("delivery precedes creation")
    return record.t_r - record.t_t


def mean_delay(records: Sequence[PacketRecord]) -> float:
    if not records:
        return 0.0
    return sum(delay(r) for r in records) / len(records)


def jain_index(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("jain index of an empty set")
    sq = sum(x * x for x in values)
    if sq == 0:
        raise ValueError("jain index undefined when every value is zero")
    s = sum(values)
    return s * s / (len(values) * sq)


def collect_ue_stats(allocations: Sequence, records: Iterable[PacketRecord],
                     demand_classes: Mapping[int, int], window: MeasurementWindow) -> list[UeStats]:
    """Per-UE, per-direction statistics over ``window``.

    ``allocations`` is the run's grant log (objects with ``tti``, ``dl``, ``ul``
    and ``links``); entries outside the window are ignored.
    """
    keys = [(ue, d) for ue in sorted(demand_classes) for d in DIRECTIONS]
    alloc_ttis = {k: 0 for k in keys}
    symbols = {k: 0 for k in keys}
    mcs_sum = {k: 0 for k in keys}
    for a in allocations:
        if not window.start_tti <= a.tti < window.end_tti:
            continue
        for d, ues in ((Direction.DL, a.dl), (Direction.UL, a.ul)):
            for ue in set(ues):
                alloc_ttis[(ue, d)] += 1
            for ue in ues:
                symbols[(ue, d)] += 1
                mcs_sum[(ue, d)] += a.links[ue][0]

    bits = {k: 0 for k in keys}
    delay_sum = {k: 0.0 for k in keys}
    count = {k: 0 for k in keys}
    for r in records:
        if not window.contains(r):
            continue
        k = (r.ue_id, r.direction)
        bits[k] += r.size_bits
        delay_sum[k] += r.t_r - r.t_t
        count[k] += 1

    duration = window.duration_ms
    out = []
    for k in keys:
        ue, d = k
        served = symbols[k] > 0
        out.append(UeStats(
            ue_id=ue,
            direction=d,
            throughput_mbps=bits[k] / (duration * 1e3),
            mean_delay_ms=delay_sum[k] / count[k] if count[k] else 0.0,
            mean_mcs=mcs_sum[k] / symbols[k] if served else 0.0,
            tti_allocation_pct=100.0 * alloc_ttis[k] / window.n_ttis,
            mean_symbols_per_alloc=symbols[k] / alloc_ttis[k] if served else 0.0,
            demand_class=demand_classes[ue],
            served=served,
            packets=count[k],
        ))
    return out


def stats_from_counts(rows: Sequence[Sequence[float]], ue_ids: Sequence[int], classes: Sequence[int],
                      n_ttis: int, slot_ms: float) -> list[UeStats]:
    """Build per-flow stats from accumulated counters.

    Row ``2 * i + k`` belongs to UE ``ue_ids[i]`` in direction ``DIRECTIONS[k]`` and
    holds (allocated TTIs, symbols, MCS sum over symbols, delivered bits, delay
    sum in ms, delivered packets). Gives the same numbers as ``collect_ue_stats``
    over the same TTIs.
    """
    duration = n_ttis * slot_ms
    out = []
    for i, row in enumerate(rows):
        alloc_ttis, symbols, mcs_sum, bits, delay_sum, count = row
        count = int(count)
        served = symbols > 0
        out.append(UeStats(
            ue_id=ue_ids[i // 2],
            direction=DIRECTIONS[i % 2],
            throughput_mbps=bits / (duration * 1e3),
            mean_delay_ms=delay_sum / count if count else 0.0,
            mean_mcs=mcs_sum / symbols if served else 0.0,
            tti_allocation_pct=100.0 * alloc_ttis / n_ttis,
            mean_symbols_per_alloc=symbols / alloc_ttis if served else 0.0,
            demand_class=classes[i // 2],
            served=bool(served),
            packets=count,
        ))
    return out


@dataclass(frozen=True)
class CellSummary:
    n_ues: int
    cell_throughput_mbps: float
    avg_ue_throughput_mbps: float
    avg_delay_ms: float
    jain: float


def summarize(stats: Sequence[UeStats], n_ues: int) -> CellSummary:
    """Cell aggregates; delay is packet-weighted and Jain runs over (UE, direction) pairs."""
    cell = sum(s.throughput_mbps for s in stats)
    packets = sum(s.packets for s in stats)
    avg_delay = sum(s.mean_delay_ms * s.packets for s in stats) / packets if packets else 0.0
    values = [s.throughput_mbps for s in stats]
    jain = jain_index(values) if any(x * x for x in values) else 1.0
    return CellSummary(n_ues, cell, cell / n_ues, avg_delay, jain)


def lexicographic_rank_correlation(stats: Sequence[UeStats]) -> float:
    """Spearman correlation between throughput and the (MCS, TTI share, symbols) ordering.

    Equal triples share a rank.
    """
    triples = [(s.mean_mcs, s.tti_allocation_pct, s.mean_symbols_per_alloc) for s in stats]
    dense = {t: i for i, t in enumerate(sorted(set(triples)))}
    rho = spearmanr([dense[t] for t in triples], [s.throughput_mbps for s in stats]).correlation
    return float(rho)
