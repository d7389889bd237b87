import random

import pytest
from hypothesis import given, strategies as st

from nrsim.ric.protocol import (Ack, Control, E2ParseError, Indication, UeKpi, decode_message, decode_stream,
                                encode_message)

finite = st.floats(-1e9, 1e9, allow_nan=False, allow_infinity=False)
names = st.sampled_from(["rr", "mt", "pf", "bogus", "x"])
kpis = st.builds(UeKpi, st.integers(0, 63), st.sampled_from(["DL", "UL"]), finite, finite, finite, finite)
indications = st.builds(Indication, st.integers(0, 10**7), st.integers(0, 10**6), names, finite, finite, finite,
                        st.lists(kpis, max_size=12).map(tuple))
controls = st.builds(Control, st.integers(-1, 10**7), names)
acks = st.builds(Ack, st.integers(-1, 10**7), st.booleans(), st.integers(-1, 10**7), names)
messages = st.one_of(indications, controls, acks)


@given(messages)
def test_round_trip(msg):
    wire = encode_message(msg)
    assert wire.endswith(b"\n") and wire.count(b"\n") == 1
    assert decode_message(wire) == msg


def random_message(rng):
    def num():
        return rng.choice([0.0, rng.uniform(-1e6, 1e6), rng.uniform(0, 1), rng.expovariate(1e-3),
                           rng.uniform(-1e-9, 1e-9), float(rng.randint(-10**9, 10**9))])

    kind = rng.randrange(3)
    policy = rng.choice(["rr", "mt", "pf", "zz"])
    if kind == 0:
        ues = tuple(UeKpi(rng.randint(0, 63), rng.choice(["DL", "UL"]), num(), num(), num(), num())
                    for _ in range(rng.randint(0, 20)))
        return Indication(rng.randint(0, 10**7), rng.randint(0, 10**5), policy, num(), num(), num(), ues)
    if kind == 1:
        return Control(rng.randint(0, 10**7), policy)
    return Ack(rng.randint(0, 10**7), rng.random() < 0.5, rng.randint(-1, 10**7), policy)


def test_round_trip_fuzz_ten_thousand():
    rng = random.Random(10_000)
    failures = 0
    for _ in range(10_000):
        m = random_message(rng)
        if decode_message(encode_message(m)) != m:
            failures += 1
    assert failures == 0


def test_wire_format_is_fixed():
    ind = Indication(39, 0, "mt", 76.8, 1.25, 0.5, (UeKpi(0, "DL", 12.3456789, 0.5, 28, 100),))
    assert encode_message(ind) == b"IND|39|0|mt|76.8|1.25|0.5|1|0|DL|12.3457|0.5|28|100\n"
    assert encode_message(Control(39, "pf")) == b"CTL|39|pf\n"
    assert encode_message(Ack(39, True, 40, "pf")) == b"ACK|39|1|40|pf\n"


def test_control_keeps_policy_name():
    assert decode_message(encode_message(Control(7, "pf"))).policy == "pf"


@pytest.mark.parametrize("raw,field", [
    (b"CTL|12|pf", None),                 # no newline terminator
    (b"CTL|12\n", "policy"),
    (b"CTL|x|pf\n", "tti"),
    (b"ACK|1|2|3|pf\n", "accepted"),
    (b"IND|1|0|rr|1|2|3|2|0|DL|1|1|1|1\n", "ue_id"),
    (b"IND|1|0|rr|1|2|nan|0\n", "jain"),
    (b"IND|1|0|rr|1|2|3|1|0|XX|1|1|1|1\n", "direction"),
    (b"CTL|1|pf|extra\n", "#3"),
    (b"HELLO|1\n", "kind"),
    (b"\xff\xfe\n", None),
])
def test_malformed_lines_raise_parse_errors(raw, field):
    with pytest.raises(E2ParseError) as e:
        decode_message(raw, line=5)
    assert e.value.line == 5
    if field:
        assert e.value.field == field


@given(messages, st.data())
def test_truncation_never_crashes(msg, data):
    wire = encode_message(msg)
    cut = data.draw(st.integers(0, len(wire) - 1))
    with pytest.raises(E2ParseError):
        decode_message(wire[:cut])


def test_stream_reports_line_numbers():
    good = encode_message(Control(1, "rr")) + encode_message(Control(2, "pf"))
    assert [m.tti for m in decode_stream(good)] == [1, 2]
    with pytest.raises(E2ParseError) as e:
        list(decode_stream(good + b"CTL|oops|rr\n"))
    assert e.value.line == 3
    with pytest.raises(E2ParseError):
        list(decode_stream(good + b"CTL|3"))


def test_invalid_tokens_cannot_be_built():
    with pytest.raises(ValueError):
        Control(1, "p|f")
    with pytest.raises(ValueError):
        UeKpi(0, "SIDE", 1, 1, 1, 1)
    with pytest.raises(ValueError):
        Indication(0, 0, "rr", float("inf"), 0, 0)
