"""Each checker must reject a trace doctored to break exactly its property."""

import pytest

from svssba import BOT, RunConfig, Trace, run_simulation
from svssba.dmm import COIN, SVSS
from svssba.properties import (
    CHECKERS,
    PropertyVerdict,
    StatisticalPropertyError,
    TraceIndex,
    check_campaign,
    check_trace,
    coin_outcomes,
    shun_pairs,
)


def failing(tr, group):
    return {v.name for v in check_trace(tr, [group]) if not v.holds}


def doctor(tr, events=None, config=None):
    out = Trace(config or tr.config)
    out.events = list(tr.events if events is None else events)
    out.status, out.steps = tr.status, tr.steps
    return out


def retarget(tr, pred, fn):
    return doctor(tr, [fn(e) if pred(e) else e for e in tr.events])


@pytest.fixture(scope="module")
def rb_trace():
    return run_simulation(RunConfig(protocol="rb", n=4, t=1, faulty=(4,), dealer=1, seed=1))


@pytest.fixture(scope="module")
def mw_trace():
    return run_simulation(RunConfig(protocol="mwsvss", n=4, t=1, faulty=(4,), dealer=1, moderator=2, seed=1))


@pytest.fixture(scope="module")
def svss_trace():
    return run_simulation(RunConfig(protocol="svss", n=4, t=1, faulty=(4,), dealer=1, seed=1))


@pytest.fixture(scope="module")
def ba_trace():
    return run_simulation(RunConfig(protocol="ba", n=4, t=1, faulty=(4,), seed=1, inputs="all0", svss_mode="ideal"))


def is_output(pid):
    return lambda e: e[0] == "output" and e[2] == pid and e[3].parent is None


def bump(e):
    return e[:4] + (e[4] + 1 if e[4] is not BOT else 0,)


def test_clean_traces_pass(rb_trace, mw_trace, svss_trace, ba_trace):
    for tr in (rb_trace, mw_trace, svss_trace, ba_trace):
        bad = [v.line() for v in check_trace(tr) if not v.holds]
        assert not bad


def test_d_soundness_negative(mw_trace):
    tr = doctor(mw_trace, mw_trace.events + [("shun-add", 99, 1, mw_trace.events[0][3], [3, "ack", 2])])
    assert failing(tr, "d-soundness") == {"d-soundness"}


def test_broadcast_negatives(rb_trace):
    tr = retarget(rb_trace, is_output(2), lambda e: e[:4] + ("forged",))
    assert {"broadcast-agreement", "broadcast-validity"} <= failing(tr, "broadcast")
    dropped = doctor(rb_trace, [e for e in rb_trace.events if not is_output(3)(e)])
    assert "broadcast-totality" in failing(dropped, "broadcast")


def test_mw_output_negatives(mw_trace):
    tr = retarget(mw_trace, is_output(3), bump)
    assert {"mw-validity-or-shun", "mw-binding-or-shun"} <= failing(tr, "mw")


def test_mw_termination_negative(mw_trace):
    tr = doctor(mw_trace, [e for e in mw_trace.events if not (e[0] == "share-complete" and e[2] == 3)])
    assert "mw-termination" in failing(tr, "mw")


def test_mw_hiding_negative(mw_trace):
    sess = next(e[3] for e in mw_trace.events if e[0] == "share-complete")
    leak = ("deliver", 1, 4, sess, [10**6, 1, ["P", sess, "F_POLY", [1, 2]]])
    tr = doctor(mw_trace, [mw_trace.events[0], leak] + mw_trace.events[1:])
    assert failing(tr, "mw") == {"mw-hiding"}


def test_svss_negatives(svss_trace):
    tr = retarget(svss_trace, is_output(2), bump)
    assert {"svss-validity-or-shun", "svss-binding-or-shun"} <= failing(tr, "svss")
    dropped = doctor(svss_trace, [e for e in svss_trace.events if not is_output(3)(e)])
    assert "svss-termination" in failing(dropped, "svss")


def test_tuple_liveness_negative(mw_trace):
    sess = next(e[3] for e in mw_trace.events if e[0] == "share-complete")
    tr = doctor(mw_trace, [("tuple-add", 0, 1, sess, ["deal", 3, 9, 5])] + mw_trace.events)
    assert failing(tr, "tuple-liveness") == {"tuple-liveness"}


def test_eventual_delivery_negative(mw_trace):
    events = [e for e in mw_trace.events if e[0] != "status"]
    events.append(("status", 0, 0, None, {"status": "quiescent", "pending_honest": 3}))
    tr = doctor(mw_trace, events)
    tr.status = "quiescent"
    assert failing(tr, "eventual-delivery") == {"eventual-delivery"}


def test_eventual_delivery_deadline(mw_trace):
    # move one nonfaulty delivery far past its fairness deadline
    events = list(mw_trace.events)
    k = next(i for i, e in enumerate(events) if e[0] == "deliver" and e[2] != 4 and e[4][1] not in (4, e[2]))
    e = events.pop(k)
    events.append(e[:1] + (10**7,) + e[2:])
    assert failing(doctor(mw_trace, events), "eventual-delivery") == {"eventual-delivery"}


def test_coin_negatives():
    tr = run_simulation(RunConfig(protocol="scc", n=4, t=1, seed=2))
    assert not failing(tr, "coin")
    child = lambda e: e[0] == "output" and e[2] == 1 and e[3].kind == SVSS and e[3].parent is not None and e[3].parent.kind == COIN
    assert "coin-consistency-or-shun" in failing(retarget(tr, child, bump), "coin")
    recon = next(e for e in tr.events if e[0] == "recon-start" and e[2] == 1)
    early = doctor(tr, [recon] + tr.events)
    assert "coin-secrecy-ordering" in failing(early, "coin")
    silent = doctor(tr, [e for e in tr.events if not (e[0] == "output" and e[3].kind == COIN and e[2] == 2)])
    assert "coin-termination" in failing(silent, "coin")


def test_coin_shun_started_in_child_session():
    # a secret behind the coin splits; the coin completes at 2 one step before the child that pins the shun
    tr = run_simulation(RunConfig(protocol="scc", n=4, t=1, faulty=(1,), adversary="example1", seed=10, drain=True))
    idx = TraceIndex(tr)
    (coin,) = idx.of_kind(COIN)
    secret = next(s for s in idx.of_kind(SVSS) if s.parent == coin and s.dealer == 1)
    values = {v for v, _ in (idx.sessions[secret].outputs[i] for i in idx.honest)}
    assert len(values) > 1
    assert not idx.view(2).shunned_in(1, coin)
    start = idx.view(2).shun_start(1)
    assert start != coin and start.within(coin)
    assert idx.shun_in(coin) == (2, 1)
    assert not failing(tr, "coin")


def test_ba_negatives(ba_trace):
    flip = lambda e: e[:4] + ({**e[4], "value": 1 - e[4]["value"]},)
    one = retarget(ba_trace, lambda e: e[0] == "decide" and e[2] == 2, flip)
    assert {"ba-agreement", "ba-validity"} <= failing(one, "ba")
    late = retarget(ba_trace, lambda e: e[0] == "decide" and e[2] == 3, lambda e: e[:4] + ({**e[4], "round": e[4]["round"] + 5},))
    assert failing(late, "ba") == {"ba-decision-spread"}
    unhalted = doctor(ba_trace, [e for e in ba_trace.events if not (e[0] == "halt" and e[2] == 1)])
    assert "ba-termination" in failing(unhalted, "ba")


def test_ba_round_ordering_negative():
    tr = run_simulation(RunConfig(protocol="ba", n=4, t=1, seed=5, inputs=(0, 1, 0, 1), svss_mode="ideal"))
    starts = [e for e in tr.events if e[0] == "session-start" and e[3].kind == 4 and e[3].c == 2]
    if not starts:
        pytest.skip("decided before a second round")
    tr2 = doctor(tr, [starts[0]] + [e for e in tr.events if e is not starts[0]])
    assert "ba-round-ordering" in failing(tr2, "ba")


def test_shun_budget_negative(ba_trace):
    sess = ba_trace.events[0][3]
    extra = [("shun-add", 0, i, sess, [j, "deal", i]) for i in (1, 2, 3) for j in (1, 2, 3) if i != j]
    tr = doctor(ba_trace, extra + ba_trace.events)
    assert len(shun_pairs(TraceIndex(tr))) > 3
    assert "ba-shun-budget" in failing(tr, "ba")


def test_parsed_trace_gets_same_verdicts(svss_trace):
    back = Trace.parse(svss_trace.to_text().splitlines())
    assert [v.line() for v in check_trace(back)] == [v.line() for v in check_trace(svss_trace)]


def test_unknown_group_and_statistical_group(mw_trace):
    with pytest.raises(KeyError):
        check_trace(mw_trace, ["nope"])
    with pytest.raises(StatisticalPropertyError):
        check_trace(mw_trace, ["coin-bias"])
    assert set(CHECKERS) >= {"d-soundness", "mw", "svss", "coin", "ba", "broadcast"}


def test_verdict_formatting():
    v = PropertyVerdict("x", False, (1,), "because", 3)
    assert not v
    assert v.line().startswith("FAIL x")
    assert PropertyVerdict("y", True).line().startswith("PASS y")


def test_campaign_bias_verdict():
    traces = [run_simulation(RunConfig(protocol="scc", n=4, t=1, seed=s, svss_mode="ideal", trace_level="summary")) for s in range(40)]
    outcomes = [o for tr in traces for o in coin_outcomes(tr)]
    assert len(outcomes) == 40
    assert check_campaign(traces, bound=0.0).holds
    assert not check_campaign(traces, bound=0.99).holds
