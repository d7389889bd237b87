import pytest
from hypothesis import given, strategies as st

from nrsim.frame import build_slot_format
from nrsim.metrics import (CellSummary, MeasurementWindow, PacketRecord, ThroughputAccumulator, UeStats,
                           collect_ue_stats, delay, jain_index, lexicographic_rank_correlation, mean_delay,
                           stats_from_counts, summarize, throughput)
from nrsim.sched import Allocation
from nrsim.traffic import Direction

DL, UL = Direction.DL, Direction.UL


def rec(size=8000, t_t=0.0, t_r=1.0, ue=0, d=DL):
    return PacketRecord(ue, d, size, t_t, t_r)


def test_throughput_three_packets():
    assert throughput([rec(), rec(), rec()], 3.0) == 8.0


def test_throughput_empty():
    assert throughput([], 3.0) == 0.0


def test_throughput_one_packet_one_ms():
    assert throughput([rec()], 1.0) == 8.0


@pytest.mark.parametrize("window", [0.0, -1.0])
def test_throughput_rejects_empty_window(window):
    with pytest.raises(ValueError):
        throughput([rec()], window)


def test_accumulator():
    acc = ThroughputAccumulator(delivery_time_ms=3.0)
    for _ in range(3):
        acc.add(8000)
    assert acc.mbps == 8.0
    with pytest.raises(ValueError):
        ThroughputAccumulator().mbps


def test_delay_examples():
    assert delay(rec(t_t=5.0, t_r=5.25)) == 0.25
    assert delay(rec(t_t=7.5, t_r=7.5)) == 0.0


def test_record_rejects_time_travel():
    with pytest.raises(ValueError):
        rec(t_t=2.0, t_r=1.0)


@given(st.lists(st.tuples(st.floats(0, 1e4), st.floats(0, 100)), min_size=1, max_size=50))
def test_mean_delay_is_arithmetic_mean(pairs):
    records = [rec(t_t=t, t_r=t + d) for t, d in pairs]
    expected = sum(r.t_r - r.t_t for r in records) / len(records)
    assert mean_delay(records) == pytest.approx(expected)
    assert mean_delay([]) == 0.0


def test_jain_examples():
    assert jain_index([3.0, 3.0, 3.0]) == 1.0
    assert jain_index([0.0, 5.0, 0.0, 0.0]) == 0.25
    assert jain_index([2.0, 4.0]) == 0.9


def test_jain_rejects_degenerate_input():
    with pytest.raises(ValueError):
        jain_index([])
    with pytest.raises(ValueError):
        jain_index([0.0, 0.0])


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=30).filter(lambda xs: any(x > 1e-6 for x in xs)))
def test_jain_bounds(xs):
    j = jain_index(xs)
    assert 1 / len(xs) - 1e-12 <= j <= 1 + 1e-12


def alloc(tti, dl=(), ul=(), links=None):
    links = links or {0: (28, 1599), 1: (10, 700)}
    n_dl = max(len(dl), 6) if len(ul) <= 6 else 12 - len(ul)
    return Allocation(tti, build_slot_format(n_dl, 12 - n_dl), tuple(dl), tuple(ul), links)


def test_collect_every_tti_and_never():
    window = MeasurementWindow(0, 4, 0.25)
    log = [alloc(t, dl=(0, 0, 0)) for t in range(4)]
    stats = {(s.ue_id, s.direction): s for s in collect_ue_stats(log, [], {0: 3, 1: 1}, window)}
    s = stats[(0, DL)]
    assert s.tti_allocation_pct == 100.0
    assert s.mean_mcs == 28.0 and s.mean_symbols_per_alloc == 3.0 and s.served
    never = stats[(1, UL)]
    assert (never.throughput_mbps, never.tti_allocation_pct, never.mean_mcs) == (0.0, 0.0, 0.0)
    assert not never.served and never.demand_class == 1


def test_single_ue_six_symbols_capacity():
    # 6 symbols * 1599 bits every 0.25 ms slot = 38.376 Mbps
    n = 400
    window = MeasurementWindow(0, n, 0.25)
    log = [alloc(t, dl=(0,) * 6) for t in range(n)]
    records = [rec(size=6 * 1599, t_t=t * 0.25, t_r=(t + 1) * 0.25) for t in range(n)]
    (s,) = [x for x in collect_ue_stats(log, records, {0: 3}, window) if x.direction is DL]
    assert s.throughput_mbps == pytest.approx(38.376, abs=1e-9)
    assert s.mean_delay_ms == 0.25


def test_window_excludes_outside_records_and_ttis():
    window = MeasurementWindow(2, 4, 0.25)
    log = [alloc(t, dl=(0,)) for t in range(6)]
    records = [rec(t_t=0.0, t_r=0.5), rec(t_t=0.5, t_r=0.75), rec(t_t=0.5, t_r=1.0), rec(t_t=1.0, t_r=1.25)]
    (s,) = [x for x in collect_ue_stats(log, records, {0: 1}, window) if x.direction is DL]
    assert s.tti_allocation_pct == 100.0
    assert s.packets == 2
    assert s.throughput_mbps == 16000 / (0.5 * 1e3)


def test_stats_from_counts_matches_collect():
    window = MeasurementWindow(0, 3, 0.25)
    log = [alloc(0, dl=(0, 0, 1), ul=(1,)), alloc(1, dl=(1,)), alloc(2, ul=(0, 0))]
    records = [rec(t_t=0.0, t_r=0.25), rec(ue=1, d=UL, t_t=0.0, t_r=0.75)]
    a = collect_ue_stats(log, records, {0: 2, 1: 1}, window)
    rows = [[1, 2, 56, 8000, 0.25, 1], [1, 2, 56, 0, 0.0, 0], [2, 2, 20, 0, 0.0, 0], [1, 1, 10, 8000, 0.75, 1]]
    b = stats_from_counts(rows, [0, 1], [2, 1], 3, 0.25)
    assert a == b


def stat(tput, ue=0, d=DL, packets=1, dly=1.0, mcs=10.0, pct=50.0, sym=2.0):
    return UeStats(ue, d, tput, dly, mcs, pct, sym, 1, tput > 0, packets)


def test_summarize():
    s = summarize([stat(2.0, dly=1.0, packets=1), stat(4.0, ue=1, dly=4.0, packets=3)], 2)
    assert s == CellSummary(2, 6.0, 3.0, 13.0 / 4, 0.9)


def test_summarize_nobody_served():
    assert summarize([stat(0.0, packets=0)], 1).jain == 1.0


@given(st.lists(st.floats(0, 50), min_size=2, max_size=20))
def test_cell_is_sum_of_flows(xs):
    s = summarize([stat(x, ue=i) for i, x in enumerate(xs)], len(xs))
    assert s.cell_throughput_mbps == sum(xs)


def test_rank_correlation_follows_triples():
    good = [stat(8.0, mcs=28, pct=60), stat(5.0, ue=1, mcs=20, pct=60), stat(1.0, ue=2, mcs=5, pct=60)]
    assert lexicographic_rank_correlation(good) == pytest.approx(1.0)
    bad = [stat(1.0, mcs=28), stat(5.0, ue=1, mcs=20), stat(8.0, ue=2, mcs=5)]
    assert lexicographic_rank_correlation(bad) == pytest.approx(-1.0)


def test_window_validation():
    with pytest.raises(ValueError):
        MeasurementWindow(5, 5, 0.25)
    w = MeasurementWindow(400, 12000, 0.25)
    assert w.duration_ms == 2900.0 and w.n_ttis == 11600
