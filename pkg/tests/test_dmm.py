import pickle

import pytest

from svssba.dmm import DELAY, DISCARD, FORWARD, MW, SVSS, DmmState, SessionId


def s(c, dealer=1, parent=None):
    return SessionId(MW, c, dealer, parent)


def test_session_ids_are_interned():
    a = SessionId(SVSS, 1, 2)
    assert SessionId(SVSS, 1, 2) is a
    assert s(3, 1, a) is s(3, 1, a)
    assert pickle.loads(pickle.dumps(a)) is a
    assert s(3, 1, a).path == "svss:1.2/mw:3.1"
    assert s(3, 1, a).within(a)
    assert not a.within(s(3, 1, a))
    with pytest.raises(ValueError):
        SessionId(MW, 0, 1)


def test_match_removes_tuple_and_keeps_d_empty():
    d = DmmState(1)
    sess = s(7)
    d.start(sess)
    assert d.record_ack(2, 3, sess, 5) == []
    events = d.on_expected_broadcast(2, sess, 3, 5)
    assert events[0] == ("tuple-remove", 2, ("ack", 2, 3, sess))
    assert not d.D
    assert d.outstanding(2) == {}


def test_mismatch_adds_to_d():
    d = DmmState(1)
    sess = s(7)
    d.start(sess)
    d.record_ack(2, 3, sess, 5)
    events = d.on_expected_broadcast(2, sess, 3, 6)
    assert events == [("shun-add", 2, ("ack", 2, 3, sess))]
    assert d.D == {2}


def test_broadcast_seen_before_tuple_is_matched_later():
    d = DmmState(3)
    sess = s(4, dealer=1)
    d.start(sess)
    d.on_expected_broadcast(2, sess, 3, 9)
    assert d.record_deal(2, sess, 8) == [("shun-add", 2, ("deal", 2, sess))]


def test_outstanding_tuple_delays_later_sessions_only():
    d = DmmState(1)
    a, b = s(1), s(2)
    d.start(a)
    d.record_ack(2, 3, a, 5)
    assert d.filter(2, a) is FORWARD
    d.complete(a)
    d.start(b)
    assert d.filter(2, b) is DELAY
    assert d.filter(3, b) is FORWARD
    events = d.on_expected_broadcast(2, a, 3, 5)
    assert ("unblock", 2, None) in events
    assert d.filter(2, b) is FORWARD


def test_concurrent_session_not_delayed():
    d = DmmState(1)
    a, b = s(1), s(2)
    d.start(a)
    d.start(b)
    d.record_ack(2, 3, a, 5)
    d.complete(a)
    assert d.filter(2, b) is FORWARD


def test_ordered_discard_rule():
    d = DmmState(1)
    a, b, c = s(1), s(2), s(3)
    d.start(a)
    d.start(b)
    d.record_ack(2, 3, a, 5)
    d.on_expected_broadcast(2, a, 3, 6)
    # b began before a completed, so 2 is still heard there
    assert d.filter(2, b) is FORWARD
    d.complete(a)
    d.start(c)
    assert d.filter(2, c) is DISCARD


def test_immediate_discard_rule():
    d = DmmState(1, discard="immediate")
    a, b = s(1), s(2)
    d.start(a)
    d.start(b)
    d.record_ack(2, 3, a, 5)
    d.on_expected_broadcast(2, a, 3, 6)
    assert d.filter(2, b) is DISCARD


def test_drop_session_deals():
    d = DmmState(3)
    a = s(1)
    d.start(a)
    d.record_deal(2, a, 4)
    d.record_deal(4, a, 4)
    events = d.drop_session_deals(a)
    assert {e[1] for e in events if e[0] == "tuple-remove"} == {2, 4}
    assert not d.deal


def test_precedes_is_local_order():
    d = DmmState(1)
    a, b = s(1), s(2)
    d.start(a)
    d.start(b)
    assert not d.precedes(a, b)
    d.complete(a)
    c = s(3)
    d.start(c)
    assert d.precedes(a, c)
    assert not d.precedes(b, c)


def test_delayed_messages_released_in_order():
    d = DmmState(1)
    d.hold(2, "x")
    d.hold(2, "y")
    assert d.take_delayed(2) == ["x", "y"]
    assert d.take_delayed(2) == []


def test_bad_options():
    with pytest.raises(ValueError):
        DmmState(1, deal_key="nope")
    with pytest.raises(ValueError):
        DmmState(1, discard="never")
