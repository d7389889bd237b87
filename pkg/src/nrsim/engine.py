"""TTI-stepped simulation loop.

The system is slot-synchronous, so instead of an event calendar the engine
walks one slot at a time through fixed phases: arrivals, TDD split, slot
format, scheduling, transmission, PF averaging, metrics, RIC mailbox.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field

from .channel import (LinkQuality, UePosition, draw_shadowing, link_quality, place_ues,
                      transport_block_bits)
from .config import ScenarioConfig
from .frame import build_slot_format, split_flexible_symbols
from .metrics import (CellSummary, MeasurementWindow, PacketRecord, UeStats, collect_ue_stats, stats_from_counts,
                      summarize)
from .rng import stream
from .sched import (PF_EPSILON, Allocation, PolicyKind, SchedPolicy, SchedulableUe, SchedulerState,
                    allocate, pf_update_averages)
from .traffic import (DIRECTIONS, ArrivalProcess, DemandProfile, Direction, UeQueue, assign_demand_profiles,
                      drain, generate_arrivals)

log = logging.getLogger(__name__)


@dataclass
class UeState:
    ue_id: int
    position: UePosition
    shadowing_db: float
    link: LinkQuality
    demand: DemandProfile
    queues: dict[Direction, UeQueue]
    sources: dict[Direction, ArrivalProcess]
    sched: dict[Direction, SchedulableUe]


@dataclass(frozen=True)
class PolicySwitch:
    effective_tti: int
    old: str
    new: str


@dataclass
class SimState:
    config: ScenarioConfig
    ues: list[UeState]
    policy: SchedPolicy
    slot_ms: float
    links: dict[int, tuple[int, int]]
    tti: int = 0
    sched_state: SchedulerState = field(default_factory=SchedulerState)
    grant_log: list[Allocation] = field(default_factory=list)
    records: list[PacketRecord] = field(default_factory=list)
    switches: list[PolicySwitch] = field(default_factory=list)
    granted_bits: list[int] = field(default_factory=list)
    delivered_bits: list[int] = field(default_factory=list)
    e2: object | None = None
    flows: list = field(default_factory=list)
    queue_index: list = field(default_factory=list)
    # per (UE, direction) since the last report: alloc TTIs, symbols, mcs sum, bits, delay sum, packets
    window_acc: list = field(default_factory=list)
    _recent: deque = field(default_factory=lambda: deque(maxlen=1))

    @property
    def demand_classes(self) -> dict[int, int]:
        return {u.ue_id: u.demand.symbols_per_slot for u in self.ues}

    def recent_allocations(self, n: int) -> list[Allocation]:
        return list(self._recent)[-n:]

    def take_window_stats(self, n_ttis: int) -> list[UeStats]:
        """Per (UE, direction) stats accumulated since the previous call, then reset.

        Matches ``collect_ue_stats`` over the last ``n_ttis`` TTIs when called once
        every ``n_ttis`` TTIs.
        """
        out = stats_from_counts(self.window_acc, [u.ue_id for u in self.ues],
                                [u.demand.symbols_per_slot for u in self.ues], n_ttis, self.slot_ms)
        for a in self.window_acc:
            a[:] = [0, 0, 0, 0, 0.0, 0]
        return out

    def switch_policy(self, name: str, effective_tti: int) -> None:
        """Change the active policy; PF averages and RR cursors start afresh."""
        old = self.policy.kind.value
        if name == old:
            return
        self.policy = SchedPolicy(PolicyKind(name), self.policy.pf_time_constant)
        self.sched_state.reset()
        for ue in self.ues:
            for s in ue.sched.values():
                s.pf_avg_rate = PF_EPSILON
        self.switches.append(PolicySwitch(effective_tti, old, name))
        log.info("policy %s -> %s from TTI %d", old, name, effective_tti)

    def digest(self) -> str:
        h = hashlib.sha256()
        for ue in self.ues:
            h.update(repr((ue.ue_id, ue.position, ue.shadowing_db, ue.link, ue.demand)).encode())
            for d in DIRECTIONS:
                q = ue.queues[d]
                h.update(repr((d.value, q.enqueued_bits, q.delivered_bits, q.backlog_bits,
                               ue.sched[d].pf_avg_rate)).encode())
        h.update(repr((self.tti, self.policy, self.sched_state.rr_cursor,
                       self.sched_state.rr_owed)).encode())
        return h.hexdigest()


@dataclass
class RunResult:
    config: ScenarioConfig
    grant_log: list[Allocation]
    records: list[PacketRecord]
    ue_stats: list[UeStats]
    summary: CellSummary
    switches: list[PolicySwitch]
    window: MeasurementWindow
    links: dict[int, LinkQuality]
    n_ttis: int
    e2: object | None = None


def setup(config: ScenarioConfig, link=None) -> SimState:
    """Place UEs, fix their link quality and demand class, empty all queues.

    ``link`` overrides the E2 transport (an InProcessLink or SocketLink);
    otherwise one is built from ``config.ric``.
    """
    n = config.n_ues
    carrier = config.carrier
    positions = place_ues(n, config.cell_radius_m, config.seed)
    shadowing = draw_shadowing(n, config.shadowing_sigma_db, config.seed)
    demands = assign_demand_profiles(n, config.direction_mix)
    if config.fixed_demand_class is not None:
        demands = [DemandProfile(config.fixed_demand_class, config.direction_mix)] * n
    mode = config.traffic_mode
    slot_ms = config.slot_ms
    phase_rng = stream(config.seed, "traffic")
    phases = phase_rng.random((n, 2))
    ids = itertools.count()

    ues = []
    links = {}
    for i in range(n):
        lq = link_quality(positions[i].distance, shadowing[i], carrier)
        rate = transport_block_bits(lq.mcs, 1, carrier.n_prb)
        links[i] = (lq.mcs, rate)
        share = {Direction.DL: 2 * config.direction_mix, Direction.UL: 2 * (1 - config.direction_mix)}
        ues.append(UeState(
            ue_id=i,
            position=positions[i],
            shadowing_db=shadowing[i],
            link=lq,
            demand=demands[i],
            queues={d: UeQueue() for d in DIRECTIONS},
            sources={d: ArrivalProcess(i, d, mode, config.packet_bytes, slot_ms, ids,
                                       phase=float(phases[i, k]), share=share[d])
                     for k, d in enumerate(DIRECTIONS)},
            sched={d: SchedulableUe(i, lq.mcs, rate) for d in DIRECTIONS},
        ))
    state = SimState(
        config=config,
        ues=ues,
        policy=SchedPolicy(PolicyKind(config.policy), config.pf_time_constant),
        slot_ms=slot_ms,
        links=links,
    )
    state._recent = deque(maxlen=config.ric.report_period)
    # flattened per-(UE, direction) view for the TTI loop
    for ue in ues:
        cls = ue.demand.symbols_per_slot
        for d in DIRECTIONS:
            s = ue.sched[d]
            state.queue_index.append(ue.queues[d])
            state.window_acc.append([0, 0, 0, 0, 0.0, 0])
            state.flows.append((ue.queues[d], s, ue.sources[d], cls, max(cls * s.rate_bits, 1),
                                d is Direction.DL, ue.link.schedulable))
    state.e2 = _attach_e2(config, link)
    return state


def _attach_e2(config: ScenarioConfig, link):
    from .ric.a1 import A1Policy, load_a1_policy
    from .ric.node import E2Node
    from .ric.transport import InProcessLink, SocketLink
    from .ric.xapp import Xapp

    if link is None:
        if config.ric.e2_socket:
            link = SocketLink(config.ric.e2_socket)
        else:
            a1 = config.ric.a1_policy
            if isinstance(a1, str):
                policy = load_a1_policy(a1)
            else:
                policy = A1Policy.from_dict(a1) if a1 else A1Policy.static(config.policy)
            link = InProcessLink(Xapp(policy, config.policy))
    return E2Node(link, config.ric.report_period)


def step_tti(state: SimState) -> SimState:
    cfg = state.config
    if state.tti >= cfg.duration_ttis:
        raise ValueError("simulation already finished")
    t = state.tti
    slot_ms = state.slot_ms
    t_end = (t + 1) * slot_ms

    # 1. arrivals; 2. queue-limited symbol demand per direction
    dl_ues, ul_ues = [], []
    dl_demand = ul_demand = 0
    for q, s, src, cls, threshold, is_dl, schedulable in state.flows:
        if src.full_buffer:
            if q.backlog_bits < threshold:
                generate_arrivals(t, q, src, threshold)
        elif t >= src.next_due:
            generate_arrivals(t, q, src, threshold)
        backlog = q.backlog_bits
        if backlog <= 0 or not schedulable:
            continue
        s.backlog_bits = backlog
        need = -(-backlog // s.rate_bits)
        need = cls if need > cls else need
        s.demand_symbols = need
        if is_dl:
            dl_ues.append(s)
            dl_demand += need
        else:
            ul_ues.append(s)
            ul_demand += need

    # 3. slot format; 4. scheduling
    fmt = build_slot_format(*split_flexible_symbols(dl_demand, ul_demand))
    alloc = allocate(state.policy, fmt, dl_ues, ul_ues, state.sched_state, t, state.links)

    # 5. transmission; 6. PF averages
    granted = delivered = 0
    records = state.records
    links = state.links
    queues = state.queue_index
    acc = state.window_acc
    tc = state.policy.pf_time_constant
    for k, d, order, eligible in ((0, Direction.DL, alloc.dl, dl_ues), (1, Direction.UL, alloc.ul, ul_ues)):
        served: dict[int, int] = {}
        for ue_id in order:
            served[ue_id] = served.get(ue_id, 0) + links[ue_id][1]
        for ue_id, budget in served.items():
            granted += budget
            a = acc[2 * ue_id + k]
            n_sym = budget // links[ue_id][1]
            a[0] += 1
            a[1] += n_sym
            a[2] += n_sym * links[ue_id][0]
            packets, _ = drain(queues[2 * ue_id + k], budget, t_end)
            for p in packets:
                bits = 8 * p.size_bytes
                delivered += bits
                a[3] += bits
                a[4] += t_end - p.t_created
                a[5] += 1
                records.append(PacketRecord(ue_id, d, bits, p.t_created, t_end))
        if eligible:
            pf_update_averages(eligible, served, tc)

    # 7. metrics
    state.granted_bits.append(granted)
    state.delivered_bits.append(delivered)
    state.grant_log.append(alloc)
    state._recent.append(alloc)

    # 8. RIC: report on window boundaries, then apply any queued controls
    e2 = state.e2
    if e2 is not None:
        if e2.due(t):
            e2.report(state)
        e2.process_mailbox(state)
    state.tti = t + 1
    return state


def run(config: ScenarioConfig, link=None, engine: str = "auto") -> RunResult:
    """Run a whole scenario.

    ``engine`` picks the loop: "python" steps ``step_tti``; "compiled" uses the
    numba kernel, which needs a synchronous (in-process) E2 link; "auto" takes
    the compiled loop whenever it can.
    """
    if engine not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown engine {engine!r}")
    state = setup(config, link)
    try:
        if engine != "python" and _compiled_ok(state):
            from .fastpath import run_compiled
            return run_compiled(state)
        if engine == "compiled":
            raise ValueError("the compiled loop needs an in-process E2 link")
        for _ in range(config.duration_ttis):
            step_tti(state)
    finally:
        if state.e2 is not None:
            state.e2.link.close()
    return finish(state)


def _compiled_ok(state: SimState) -> bool:
    from .ric.transport import InProcessLink
    return state.e2 is None or isinstance(state.e2.link, InProcessLink)


def finish(state: SimState) -> RunResult:
    cfg = state.config
    window = MeasurementWindow(cfg.measurement_start, state.tti, state.slot_ms)
    stats = collect_ue_stats(state.grant_log, state.records, state.demand_classes, window)
    return RunResult(
        config=cfg,
        grant_log=state.grant_log,
        records=state.records,
        ue_stats=stats,
        summary=summarize(stats, len(state.ues)),
        switches=state.switches,
        window=window,
        links={u.ue_id: u.link for u in state.ues},
        n_ttis=state.tti,
        e2=state.e2,
    )
