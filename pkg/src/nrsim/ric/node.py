"""gNB side of the E2 link: periodic KPI indications out, policy controls in."""
from __future__ import annotations

import logging

from ..metrics import summarize
from ..sched import POLICY_NAMES
from .protocol import Ack, Control, Indication, UeKpi

log = logging.getLogger(__name__)


def gnb_apply_control(state, ctrl: Control) -> Ack:
    """Apply a policy control at the next TTI boundary.

    Called after TTI ``state.tti`` has been scheduled, so the new policy is
    in force from ``state.tti + 1``. Re-sending the active policy is a no-op
    that is still acknowledged.
    """
    if ctrl.policy not in POLICY_NAMES:
        log.warning("rejecting control for unknown policy %r", ctrl.policy)
        return Ack(tti=state.tti, accepted=False, effective_tti=-1, policy=ctrl.policy)
    effective = state.tti + 1
    state.switch_policy(ctrl.policy, effective)
    return Ack(tti=state.tti, accepted=True, effective_tti=effective, policy=ctrl.policy)


class E2Node:
    def __init__(self, link, report_period: int):
        self.link = link
        self.report_period = report_period
        self.window = 0
        self.indications: list[Indication] = []
        self.controls: list[Control] = []
        self.acks: list[Ack] = []

    def due(self, tti: int) -> bool:
        return (tti + 1) % self.report_period == 0

    def build_indication(self, state) -> Indication:
        end = state.tti + 1
        start = max(0, end - self.report_period)
        stats = state.take_window_stats(end - start)
        summary = summarize(stats, len(state.ues))
        ues = tuple(UeKpi(s.ue_id, s.direction.value, s.throughput_mbps, s.mean_delay_ms, s.mean_mcs,
                          s.tti_allocation_pct) for s in stats)
        ind = Indication(tti=state.tti, window=self.window, policy=state.policy.kind.value,
                         cell_throughput_mbps=summary.cell_throughput_mbps,
                         mean_delay_ms=summary.avg_delay_ms, jain=summary.jain, ues=ues)
        self.window += 1
        return ind

    def report(self, state) -> Indication:
        ind = self.build_indication(state)
        self.indications.append(ind)
        self.link.send(ind)
        return ind

    def process_mailbox(self, state) -> list[Ack]:
        acks = []
        for msg in self.link.poll():
            if not isinstance(msg, Control):
                log.warning("gNB ignoring unexpected message %r", msg)
                continue
            self.controls.append(msg)
            ack = gnb_apply_control(state, msg)
            acks.append(ack)
            self.acks.append(ack)
            self.link.send(ack)
        return acks
