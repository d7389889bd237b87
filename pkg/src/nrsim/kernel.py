"""Compiled TTI loop used by ``run`` for in-process RIC links.

It performs the same phases as ``engine.step_tti`` on flat arrays, one chunk
of TTIs per call, stopping at every E2 report boundary so the Python side can
exchange messages with the xApp. Flow ``f`` is (UE ``f // 2``, DL if ``f`` is
even else UL). Results are bit-identical to the reference loop; the test
suite compares the two on randomized scenarios.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .frame import FLEXIBLE_SYMBOLS

POLICY_CODES = {"rr": 0, "mt": 1, "pf": 2}

# columns of the per-flow accumulators
ACC_ALLOC_TTIS, ACC_SYMBOLS, ACC_MCS_SUM, ACC_BITS, ACC_DELAY_SUM, ACC_PACKETS = range(6)
ACC_WIDTH = 6


@njit(cache=True)
def _split(dl_demand, ul_demand):
    total = dl_demand + ul_demand
    if total == 0:
        return FLEXIBLE_SYMBOLS // 2
    n_dl = (FLEXIBLE_SYMBOLS * dl_demand) // total
    rem = (FLEXIBLE_SYMBOLS * dl_demand) % total
    if 2 * rem > total or (2 * rem == total and n_dl % 2 == 1):
        n_dl += 1
    if dl_demand > 0 and n_dl < 1:
        n_dl = 1
    if ul_demand > 0 and n_dl > FLEXIBLE_SYMBOLS - 1:
        n_dl = FLEXIBLE_SYMBOLS - 1
    return n_dl


@njit(cache=True)
def _schedule(policy, elig, n_elig, n_symbols, demand, mcs, rate, pf_avg, pf_t, cursor, owed, d, out):
    """Fill ``out`` with the UE id of each granted symbol; returns (count, cursor).

    ``elig`` holds flow indices in ascending UE order. ``owed[d]`` and
    ``owed[d + 2]`` are the RR owed UE (-1 for none) and its symbols due.
    """
    if n_elig == 0 or n_symbols <= 0:
        return 0, cursor
    count = 0
    if policy == 0:
        start = 0
        if cursor >= 0:
            for i in range(n_elig):
                if elig[i] // 2 > cursor:
                    start = i
                    break
        remaining = n_symbols
        new_ue = -1
        new_rem = 0
        for k in range(n_elig):
            if remaining == 0:
                break
            f = elig[(start + k) % n_elig]
            quota = demand[f]
            if k == 0 and owed[d] == f // 2 and owed[d + 2] < quota:
                quota = owed[d + 2]
            g = min(quota, remaining)
            for _ in range(g):
                out[count] = f // 2
                count += 1
            remaining -= g
            if g == quota:
                cursor = f // 2
            else:
                new_ue = f // 2
                new_rem = quota - g
        owed[d] = new_ue
        owed[d + 2] = new_rem
        return count, cursor
    if policy == 1:
        keys = np.empty(n_elig, np.int64)
        for i in range(n_elig):
            keys[i] = -mcs[elig[i]]
        order = np.argsort(keys, kind="mergesort")
        remaining = n_symbols
        for j in range(n_elig):
            if remaining <= 0:
                break
            f = elig[order[j]]
            g = min(demand[f], remaining)
            for _ in range(g):
                out[count] = f // 2
                count += 1
            remaining -= g
        return count, cursor
    avg = np.empty(n_elig, np.float64)
    room = np.empty(n_elig, np.int64)
    step = np.empty(n_elig, np.float64)
    for i in range(n_elig):
        f = elig[i]
        avg[i] = pf_avg[f]
        room[i] = demand[f]
        step[i] = rate[f] / pf_t
    for _ in range(n_symbols):
        best = -1
        best_p = -1.0
        for i in range(n_elig):
            if room[i] > 0:
                p = rate[elig[i]] / avg[i]
                if p > best_p:
                    best = i
                    best_p = p
        if best < 0:
            break
        room[best] -= 1
        avg[best] += step[best]
        out[count] = elig[best] // 2
        count += 1
    return count, cursor


@njit(cache=True)
def run_chunk(t0, t1, slot_ms, policy, pf_t, meas_start,
              cls, rate, mcs, schedulable, threshold,
              full_buffer, bits_per_tti, offset, packet_bits, emitted, next_due,
              q_tc, q_head, q_len, head_sent, backlog, enq_bits, del_bits,
              pf_avg, cursor, owed,
              n_dl_out, dl_out, ul_out, n_dl_used, n_ul_used, granted_out, delivered_out,
              rec_flow, rec_tc, rec_tr, rec_count,
              acc_win, acc_meas):
    n_flows = cls.shape[0]
    cap = q_tc.shape[1]
    demand = np.zeros(n_flows, np.int64)
    elig_dl = np.empty(n_flows, np.int64)
    elig_ul = np.empty(n_flows, np.int64)
    sym = np.empty(FLEXIBLE_SYMBOLS, np.int64)
    seen = np.zeros(n_flows, np.int64)
    served = np.zeros(n_flows, np.int64)
    a = 1.0 / pf_t
    b = 1.0 - a
    nrec = rec_count[0]
    for t in range(t0, t1):
        k = t - t0
        t_now = t * slot_ms
        t_end = (t + 1) * slot_ms
        # 1. arrivals; 2. demand
        n_dlq = 0
        n_ulq = 0
        dl_demand = 0
        ul_demand = 0
        for f in range(n_flows):
            new = 0
            if full_buffer[f]:
                if backlog[f] < threshold[f]:
                    bl = backlog[f]
                    while bl < threshold[f]:
                        new += 1
                        bl += packet_bits
            elif t >= next_due[f]:
                total = math.floor((offset[f] + (t + 1) * bits_per_tti[f]) / packet_bits)
                if total > emitted[f]:
                    new = total - emitted[f]
                    emitted[f] = total
                if bits_per_tti[f] <= 0:
                    due = math.inf
                else:
                    need = (emitted[f] + 1) * packet_bits - offset[f]
                    due = max(0.0, math.ceil(need / bits_per_tti[f]) - 1.0)
                next_due[f] = max(t + 1.0, due)
            for _ in range(new):
                q_tc[f, (q_head[f] + q_len[f]) % cap] = t_now
                q_len[f] += 1
            backlog[f] += new * packet_bits
            enq_bits[f] += new * packet_bits
            bl = backlog[f]
            if bl <= 0 or not schedulable[f]:
                continue
            need_sym = -(-bl // rate[f])
            if need_sym > cls[f]:
                need_sym = cls[f]
            demand[f] = need_sym
            if f % 2 == 0:
                elig_dl[n_dlq] = f
                n_dlq += 1
                dl_demand += need_sym
            else:
                elig_ul[n_ulq] = f
                n_ulq += 1
                ul_demand += need_sym

        # 3. slot format; 4. scheduling; 5. transmission; 6. PF averages
        n_dl = _split(dl_demand, ul_demand)
        n_dl_out[k] = n_dl
        granted = 0
        delivered = 0
        for d in range(2):
            if d == 0:
                cnt, cursor[0] = _schedule(policy, elig_dl, n_dlq, n_dl, demand, mcs, rate, pf_avg,
                                           pf_t, cursor[0], owed, 0, sym)
                n_dl_used[k] = cnt
                for i in range(cnt):
                    dl_out[k, i] = sym[i]
            else:
                cnt, cursor[1] = _schedule(policy, elig_ul, n_ulq, FLEXIBLE_SYMBOLS - n_dl, demand, mcs,
                                           rate, pf_avg, pf_t, cursor[1], owed, 1, sym)
                n_ul_used[k] = cnt
                for i in range(cnt):
                    ul_out[k, i] = sym[i]
            for i in range(cnt):
                served[2 * sym[i] + d] += 1
            # drain each served flow once, in order of first appearance
            for i in range(cnt):
                f = 2 * sym[i] + d
                if seen[f]:
                    continue
                seen[f] = 1
                n_sym = served[f]
                budget = n_sym * rate[f]
                granted += budget
                acc_win[f, 0] += 1
                acc_win[f, 1] += n_sym
                acc_win[f, 2] += n_sym * mcs[f]
                if t >= meas_start:
                    acc_meas[f, 0] += 1
                    acc_meas[f, 1] += n_sym
                    acc_meas[f, 2] += n_sym * mcs[f]
                sent = 0
                while budget > 0 and q_len[f] > 0:
                    need = packet_bits - head_sent[f]
                    if budget >= need:
                        budget -= need
                        sent += need
                        tc = q_tc[f, q_head[f]]
                        q_head[f] = (q_head[f] + 1) % cap
                        q_len[f] -= 1
                        head_sent[f] = 0
                        del_bits[f] += packet_bits
                        delivered += packet_bits
                        acc_win[f, 3] += packet_bits
                        acc_win[f, 4] += t_end - tc
                        acc_win[f, 5] += 1
                        if t + 1 > meas_start:
                            acc_meas[f, 3] += packet_bits
                            acc_meas[f, 4] += t_end - tc
                            acc_meas[f, 5] += 1
                        rec_flow[nrec] = f
                        rec_tc[nrec] = tc
                        rec_tr[nrec] = t_end
                        nrec += 1
                    else:
                        head_sent[f] += budget
                        sent += budget
                        budget = 0
                backlog[f] -= sent
            # averages move under every policy so a later switch to PF starts from history
            elig = elig_dl if d == 0 else elig_ul
            n_el = n_dlq if d == 0 else n_ulq
            for i in range(n_el):
                f = elig[i]
                v = b * pf_avg[f] + a * (served[f] * rate[f])
                pf_avg[f] = v if v > 1.0 else 1.0
            for i in range(cnt):
                f = 2 * sym[i] + d
                seen[f] = 0
                served[f] = 0
        granted_out[k] = granted
        delivered_out[k] = delivered
    rec_count[0] = nrec
