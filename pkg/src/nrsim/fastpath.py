"""Drive the compiled kernel for a whole run and package the result.

State comes from ``engine.setup`` so placement, links, traffic phases and the
E2 node are exactly those of the reference loop. The grant log and packet
records stay in arrays and are turned into objects only when indexed.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .frame import FLEXIBLE_SYMBOLS, build_slot_format
from .kernel import ACC_WIDTH, POLICY_CODES, run_chunk
from .metrics import MeasurementWindow, PacketRecord, stats_from_counts, summarize
from .sched import POLICY_NAMES, Allocation
from .traffic import DIRECTIONS


class GrantLog(Sequence):
    """Read-only view of the per-TTI allocations of a compiled run."""

    def __init__(self, n_dl, dl, ul, n_dl_used, n_ul_used, policy, links):
        self._n_dl = n_dl
        self._dl = dl
        self._ul = ul
        self._n_dl_used = n_dl_used
        self._n_ul_used = n_ul_used
        self._policy = policy
        self._links = links

    def __len__(self) -> int:
        return len(self._n_dl)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        n_dl = int(self._n_dl[i])
        return Allocation(
            tti=i,
            slot_format=build_slot_format(n_dl, FLEXIBLE_SYMBOLS - n_dl),
            dl=tuple(self._dl[i, : self._n_dl_used[i]].tolist()),
            ul=tuple(self._ul[i, : self._n_ul_used[i]].tolist()),
            links=self._links,
            policy=POLICY_NAMES[self._policy[i]],
        )


class RecordLog(Sequence):
    """Read-only view of the delivered-packet records of a compiled run."""

    def __init__(self, flow, t_t, t_r, size_bits):
        self._flow = flow
        self._t_t = t_t
        self._t_r = t_r
        self._size = size_bits

    def __len__(self) -> int:
        return len(self._flow)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        f = int(self._flow[i])
        return PacketRecord(f // 2, DIRECTIONS[f % 2], self._size, float(self._t_t[i]), float(self._t_r[i]))


class _Arrays:
    """Flat per-flow copies of the reference state."""

    def __init__(self, state):
        flows = state.flows
        n = len(flows)
        self.cls = np.array([fl[3] for fl in flows], np.int64)
        self.rate = np.array([fl[1].rate_bits for fl in flows], np.int64)
        self.mcs = np.array([fl[1].mcs for fl in flows], np.int64)
        self.schedulable = np.array([fl[6] for fl in flows], np.bool_)
        self.threshold = np.array([fl[4] for fl in flows], np.int64)
        srcs = [fl[2] for fl in flows]
        self.full_buffer = np.array([s.full_buffer for s in srcs], np.bool_)
        self.bits_per_tti = np.array([s.bits_per_tti for s in srcs], np.float64)
        self.offset = np.array([s._offset for s in srcs], np.float64)
        self.emitted = np.array([s._emitted for s in srcs], np.int64)
        self.next_due = np.array([s.next_due for s in srcs], np.float64)
        self.packet_bits = srcs[0].packet_bits
        self.q_tc = np.zeros((n, 16), np.float64)
        self.q_head = np.zeros(n, np.int64)
        self.q_len = np.zeros(n, np.int64)
        self.head_sent = np.zeros(n, np.int64)
        self.backlog = np.zeros(n, np.int64)
        self.enq_bits = np.zeros(n, np.int64)
        self.del_bits = np.zeros(n, np.int64)
        self.pf_avg = np.array([fl[1].pf_avg_rate for fl in flows], np.float64)
        cur = state.sched_state.rr_cursor
        self.cursor = np.array([-1 if cur[d] is None else cur[d] for d in DIRECTIONS], np.int64)
        owed = [state.sched_state.rr_owed[d] or (-1, 0) for d in DIRECTIONS]
        self.owed = np.array([owed[0][0], owed[1][0], owed[0][1], owed[1][1]], np.int64)
        self.acc_win = np.zeros((n, ACC_WIDTH), np.float64)
        self.acc_meas = np.zeros((n, ACC_WIDTH), np.float64)
        self.max_rate = int(self.rate.max()) if n else 0

    def ensure_queue_room(self, n_ttis: int) -> None:
        """Grow the packet ring buffers so ``n_ttis`` more TTIs of arrivals fit."""
        pb = self.packet_bits
        per_tti = np.ceil(self.bits_per_tti / pb) + 1
        fb = (self.threshold + pb - 1) // pb + 1
        bound = np.where(self.full_buffer, fb + 1, per_tti * n_ttis + 1)
        need = int((self.q_len + bound).max())
        cap = self.q_tc.shape[1]
        if need <= cap:
            return
        new_cap = max(need, 2 * cap)
        grown = np.zeros((len(self.q_len), new_cap), np.float64)
        for f in range(len(self.q_len)):
            idx = (self.q_head[f] + np.arange(self.q_len[f])) % cap
            grown[f, : self.q_len[f]] = self.q_tc[f, idx]
        self.q_tc = grown
        self.q_head[:] = 0


def run_compiled(state):
    """Run ``state`` (fresh from ``setup``) to completion; returns a RunResult."""
    from .engine import RunResult

    cfg = state.config
    total = cfg.duration_ttis
    arr = _Arrays(state)
    n_flows = len(state.flows)
    start = cfg.measurement_start
    pb = arr.packet_bits

    n_dl = np.zeros(total, np.int64)
    dl = np.zeros((total, FLEXIBLE_SYMBOLS), np.int64)
    ul = np.zeros((total, FLEXIBLE_SYMBOLS), np.int64)
    n_dl_used = np.zeros(total, np.int64)
    n_ul_used = np.zeros(total, np.int64)
    policy_log = np.zeros(total, np.int64)
    granted = np.zeros(total, np.int64)
    delivered = np.zeros(total, np.int64)
    rec_cap = 1024
    rec_flow = np.zeros(rec_cap, np.int64)
    rec_tc = np.zeros(rec_cap, np.float64)
    rec_tr = np.zeros(rec_cap, np.float64)
    rec_count = np.zeros(1, np.int64)
    per_tti_records = FLEXIBLE_SYMBOLS * arr.max_rate // pb + n_flows + 1

    e2 = state.e2
    ue_ids = [u.ue_id for u in state.ues]
    classes = [u.demand.symbols_per_slot for u in state.ues]

    def take_window_stats(n_ttis):
        rows = arr.acc_win.tolist()
        arr.acc_win[:] = 0.0
        return stats_from_counts(rows, ue_ids, classes, n_ttis, state.slot_ms)

    state.take_window_stats = take_window_stats

    t = 0
    while t < total:
        if e2 is None:
            t1 = total
        elif getattr(e2.link, "has_pending", False):
            t1 = t + 1
        else:
            period = e2.report_period
            t1 = min(total, (t // period + 1) * period)
        n = t1 - t
        arr.ensure_queue_room(n)
        if rec_count[0] + n * per_tti_records > rec_cap:
            rec_cap = max(2 * rec_cap, int(rec_count[0] + n * per_tti_records))
            rec_flow = np.resize(rec_flow, rec_cap)
            rec_tc = np.resize(rec_tc, rec_cap)
            rec_tr = np.resize(rec_tr, rec_cap)
        code = POLICY_CODES[state.policy.kind.value]
        policy_log[t:t1] = code
        run_chunk(t, t1, state.slot_ms, code, float(state.policy.pf_time_constant), start,
                  arr.cls, arr.rate, arr.mcs, arr.schedulable, arr.threshold,
                  arr.full_buffer, arr.bits_per_tti, arr.offset, pb, arr.emitted, arr.next_due,
                  arr.q_tc, arr.q_head, arr.q_len, arr.head_sent, arr.backlog, arr.enq_bits, arr.del_bits,
                  arr.pf_avg, arr.cursor, arr.owed,
                  n_dl[t:t1], dl[t:t1], ul[t:t1], n_dl_used[t:t1], n_ul_used[t:t1],
                  granted[t:t1], delivered[t:t1],
                  rec_flow, rec_tc, rec_tr, rec_count,
                  arr.acc_win, arr.acc_meas)
        state.tti = t1 - 1
        if e2 is not None:
            switches = len(state.switches)
            if e2.due(t1 - 1):
                e2.report(state)
            e2.process_mailbox(state)
            if len(state.switches) != switches:
                arr.pf_avg[:] = 1.0
                arr.cursor[:] = -1
                arr.owed[:] = [-1, -1, 0, 0]
        t = state.tti = t1

    nrec = int(rec_count[0])
    window = MeasurementWindow(start, total, state.slot_ms)
    stats = stats_from_counts(arr.acc_meas.tolist(), ue_ids, classes, window.n_ttis, state.slot_ms)
    state.granted_bits = granted
    state.delivered_bits = delivered
    return RunResult(
        config=cfg,
        grant_log=GrantLog(n_dl, dl, ul, n_dl_used, n_ul_used, policy_log, state.links),
        records=RecordLog(rec_flow[:nrec], rec_tc[:nrec], rec_tr[:nrec], pb),
        ue_stats=stats,
        summary=summarize(stats, len(state.ues)),
        switches=state.switches,
        window=window,
        links={u.ue_id: u.link for u in state.ues},
        n_ttis=total,
        e2=e2,
    )
