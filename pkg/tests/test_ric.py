import threading

import pytest

from nrsim.config import ScenarioConfig
from nrsim.engine import run
from nrsim.experiments import heterogeneous
from nrsim.ric.a1 import A1Policy, A1PolicyError, Condition, load_a1_policy
from nrsim.ric.protocol import Ack, Control, Indication
from nrsim.ric.transport import InProcessLink, SocketLink, parse_address, serve_xapp
from nrsim.ric.xapp import Xapp, XappState, xapp_evaluate

FAIRNESS = {"mode": "adaptive", "hysteresis": 5, "rules": [{"when": "jain < 0.6", "then": "pf"}]}


def report(window, jain, policy="mt"):
    return Indication(tti=40 * window + 39, window=window, policy=policy, cell_throughput_mbps=50.0,
                      mean_delay_ms=1.0, jain=jain)


def test_condition_parsing():
    c = Condition.parse("jain < 0.6")
    assert (c.field, c.op, c.threshold) == ("jain", "<", 0.6)
    assert Condition.parse("mean_delay_ms>=2").op == ">="
    assert Condition.parse("jain ≤ 0.5").holds(report(0, 0.5))
    for bad in ["jain = 0.6", "latency < 3", "jain < x", ""]:
        with pytest.raises(A1PolicyError):
            Condition.parse(bad)


def test_policy_document_validation():
    p = A1Policy.from_dict(FAIRNESS)
    assert p.mode == "adaptive" and p.rules[0].target == "pf"
    bad_docs = [
        {"mode": "static"},
        {"mode": "sometimes", "static_policy": "rr"},
        {"mode": "adaptive", "hysteresis": 0},
        {"mode": "adaptive", "rules": [{"when": "jain < 1", "then": "edf"}]},
        {"mode": "adaptive", "rules": [{"when": "bler < 1", "then": "pf"}]},
        {"mode": "adaptive", "rules": [{"if": "jain < 1", "then": "pf"}]},
        {"mode": "adaptive", "extra": 1},
        ["not", "a", "mapping"],
    ]
    for doc in bad_docs:
        with pytest.raises(A1PolicyError):
            A1Policy.from_dict(doc)


def test_load_policy_file(tmp_path):
    path = tmp_path / "p.yaml"
    path.write_text("mode: adaptive\nrules:\n  - when: \"jain < 0.6\"\n    then: pf\n")
    assert load_a1_policy(path).rules[0].condition.field == "jain"


def test_rule_fires_on_low_fairness():
    state = XappState("mt")
    ctrl = xapp_evaluate(state, report(0, 0.45), A1Policy.from_dict(FAIRNESS))
    assert ctrl == Control(39, "pf")


def test_rule_quiet_on_high_fairness():
    assert xapp_evaluate(XappState("mt"), report(0, 0.9), A1Policy.from_dict(FAIRNESS)) is None


def test_hysteresis_allows_one_control():
    policy = A1Policy.from_dict({**FAIRNESS, "rules": [{"when": "jain < 0.6", "then": "pf"},
                                                      {"when": "jain >= 0.6", "then": "mt"}]})
    state = XappState("mt")
    out = [xapp_evaluate(state, report(w, j), policy) for w, j in enumerate([0.4, 0.9, 0.9, 0.4])]
    assert [c.policy for c in out if c] == ["pf"]
    later = xapp_evaluate(state, report(5, 0.9, policy="pf"), policy)
    assert later == Control(5 * 40 + 39, "mt")


def test_static_mode_sends_once():
    state = XappState("rr")
    policy = A1Policy.static("pf")
    first = xapp_evaluate(state, report(0, 0.5, "rr"), policy)
    assert first.policy == "pf"
    assert xapp_evaluate(state, report(1, 0.5, "rr"), policy) is None


def test_static_mode_ignores_rules():
    policy = A1Policy(mode="static", static_policy="rr", rules=A1Policy.from_dict(FAIRNESS).rules)
    assert xapp_evaluate(XappState("rr"), report(0, 0.1, "rr"), policy) is None


def test_liveness_with_permanent_rule():
    policy = A1Policy.from_dict({"mode": "adaptive", "evaluation_period": 3,
                                 "rules": [{"when": "jain < 2", "then": "rr"}]})
    state = XappState("mt")
    out = [xapp_evaluate(state, report(w, 0.5), policy) for w in range(3)]
    assert sum(c is not None for c in out) == 1


def test_stale_report_rejected():
    state = XappState("mt")
    xapp_evaluate(state, report(3, 0.9), A1Policy.static("mt"))
    with pytest.raises(ValueError):
        xapp_evaluate(state, report(3, 0.9), A1Policy.static("mt"))


def test_xapp_tracks_acks():
    app = Xapp(A1Policy.from_dict(FAIRNESS), "mt")
    (ctrl,) = app.handle(report(0, 0.3))
    assert app.state.pending == "pf"
    assert app.handle(Ack(39, True, 40, "pf")) == []
    assert app.state.pending is None and app.acks[0].effective_tti == 40


def loop_config(**kw):
    return heterogeneous(ScenarioConfig(duration_ttis=2000, policy="mt", ric={"a1_policy": FAIRNESS}, **kw))


def test_closed_loop_switches_once_at_acked_tti():
    res = run(loop_config())
    e2 = res.e2
    assert len(e2.controls) == 1 and len(e2.acks) == 1
    ack = e2.acks[0]
    assert ack.accepted and ack.policy == "pf"
    policies = [a.policy for a in res.grant_log]
    assert set(policies[: ack.effective_tti]) == {"mt"}
    assert set(policies[ack.effective_tti:]) == {"pf"}
    assert res.switches[0].effective_tti == ack.effective_tti


def test_identical_controls_apply_once():
    from nrsim.engine import setup
    from nrsim.ric.node import gnb_apply_control

    state = setup(ScenarioConfig(duration_ttis=10, policy="mt"))
    acks = [gnb_apply_control(state, Control(0, "pf")) for _ in range(3)]
    assert len(state.switches) == 1
    assert all(a.accepted and a.effective_tti == 1 for a in acks)


def test_parse_address():
    assert parse_address("127.0.0.1:9000") == ("127.0.0.1", 9000)
    assert parse_address(":9000") == ("127.0.0.1", 9000)
    with pytest.raises(ValueError):
        parse_address("localhost")


def serve_in_background(app, connections=1):
    ready, bound = threading.Event(), []
    t = threading.Thread(target=serve_xapp, args=(app,), kwargs=dict(ready=ready, bound=bound,
                                                                    connections=connections), daemon=True)
    t.start()
    assert ready.wait(5)
    host, port = bound[0]
    return t, f"{host}:{port}"


def test_socket_link_round_trip():
    app = Xapp(A1Policy.from_dict(FAIRNESS), "mt")
    thread, addr = serve_in_background(app)
    link = SocketLink(addr)
    link.send(report(0, 0.2))
    got = []
    for _ in range(500):
        got += link.poll()
        if got:
            break
        threading.Event().wait(0.01)
    assert got == [Control(39, "pf")]
    link.send(Ack(39, True, 40, "pf"))
    link.close()
    thread.join(5)
    assert app.acks == [Ack(39, True, 40, "pf")]


def test_socket_run_matches_in_process_under_static_policy():
    cfg = ScenarioConfig(duration_ttis=300, warmup_ttis=40, policy="rr", n_ues=3)
    thread, addr = serve_in_background(lambda: Xapp(A1Policy.static("rr"), "rr"))
    remote = run(cfg, link=SocketLink(addr))
    thread.join(5)
    local = run(cfg, link=InProcessLink(Xapp(A1Policy.static("rr"), "rr")))
    assert remote.ue_stats == local.ue_stats
    assert remote.e2.indications == local.e2.indications
