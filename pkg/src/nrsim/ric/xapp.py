"""Scheduling xApp: reads KPI indications, applies the A1 policy and emits
policy controls."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from ..sched import POLICY_NAMES
from .a1 import A1Policy
from .protocol import Ack, Control, E2Message, Indication

log = logging.getLogger(__name__)

HISTORY = 64


@dataclass
class XappState:
    active_policy: str
    last_switch_window: int | None = None
    last_window: int = -1
    pending: str | None = None  # control sent, ack outstanding
    static_sent: bool = False
    controls_sent: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=HISTORY))

    def __post_init__(self):
        if self.active_policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.active_policy!r}")


def _emit(state: XappState, report: Indication, target: str) -> Control:
    state.active_policy = target
    state.pending = target
    state.last_switch_window = report.window
    state.controls_sent += 1
    log.info("window %d: requesting policy %s", report.window, target)
    return Control(tti=report.tti, policy=target)


def xapp_evaluate(state: XappState, report: Indication, policy: A1Policy) -> Control | None:
    if report.window <= state.last_window:
        raise ValueError(f"report window {report.window} already processed (last {state.last_window})")
    state.last_window = report.window
    state.history.append(report)
    if state.pending is None and report.policy in POLICY_NAMES:
        state.active_policy = report.policy

    if policy.mode == "static":
        if not state.static_sent and state.active_policy != policy.static_policy:
            state.static_sent = True
            return _emit(state, report, policy.static_policy)
        return None

    if (report.window + 1) % policy.evaluation_period:
        return None
    if state.last_switch_window is not None and report.window - state.last_switch_window < policy.hysteresis:
        return None
    for rule in policy.rules:
        if rule.condition.holds(report):
            if rule.target == state.active_policy:
                return None
            return _emit(state, report, rule.target)
    return None


class Xapp:
    """Message-level wrapper: feed it decoded E2 messages, get replies back."""

    def __init__(self, policy: A1Policy, initial_policy: str):
        self.policy = policy
        self.state = XappState(active_policy=initial_policy)
        self.controls: list[Control] = []
        self.acks: list[Ack] = []

    def handle(self, msg: E2Message) -> list[E2Message]:
        if isinstance(msg, Indication):
            ctrl = xapp_evaluate(self.state, msg, self.policy)
            if ctrl is not None:
                self.controls.append(ctrl)
                return [ctrl]
            return []
        if isinstance(msg, Ack):
            self.acks.append(msg)
            if self.state.pending == msg.policy:
                self.state.pending = None
            if not msg.accepted:
                log.warning("gNB rejected policy %s", msg.policy)
            return []
        log.warning("xApp ignoring unexpected message %r", msg)
        return []
