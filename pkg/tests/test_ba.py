from hypothesis import given, settings
from hypothesis import strategies as st

from svssba import RunConfig, run_simulation
from svssba.ba import majority
from svssba.campaigns import ALL_STRATEGIES, faulty_set
from svssba.properties import ba_round_stats, check_trace, last_decision_round, shun_pairs, TraceIndex


def decisions(tr):
    return {pid: v for (pid, s), v in tr.outputs().items() if s.parent is None and pid in tr.config.honest}


def test_majority_ties_go_to_zero():
    assert majority([1, 0]) == 0
    assert majority([1, 1, 0]) == 1
    assert majority([]) == 0


def test_unanimous_input_decides_it_in_round_one():
    for bit in (0, 1):
        tr = run_simulation(RunConfig(protocol="ba", n=4, t=1, seed=2, inputs=f"all{bit}", svss_mode="ideal"))
        assert set(decisions(tr).values()) == {bit}
        assert last_decision_round(tr) == 1


def test_real_coin_run_agrees_and_halts():
    tr = run_simulation(RunConfig(protocol="ba", n=4, t=1, seed=3, inputs=(0, 1, 1, 0)))
    assert len(decisions(tr)) == 4
    assert len(set(decisions(tr).values())) == 1
    assert all(v.holds for v in check_trace(tr, ["ba"]))


def test_round_cap_is_recorded():
    tr = run_simulation(RunConfig(protocol="ba", n=4, t=1, seed=1, svss_mode="ideal", max_rounds=1, inputs=(0, 1, 0, 1)))
    if not decisions(tr):
        assert tr.of_kind("round-cap")


def test_round_stats():
    st_ = ba_round_stats([1, 2, 3, None])
    assert st_.runs == 4 and st_.undecided == 1 and st_.max_rounds == 3
    assert abs(st_.mean_rounds - 2.0) < 1e-9


@settings(max_examples=40)
@given(st.integers(0, 100_000), st.sampled_from(ALL_STRATEGIES), st.sampled_from([4, 7]))
def test_agreement_validity_and_budget(seed, strategy, n):
    t = (n - 1) // 3
    cfg = RunConfig(protocol="ba", n=n, t=t, faulty=faulty_set(n, t, seed, strategy), adversary=strategy, seed=seed, svss_mode="ideal")
    tr = run_simulation(cfg)
    bad = [v for v in check_trace(tr, ["ba", "d-soundness"]) if not v.holds]
    assert not bad, bad[0].line()
    assert len(shun_pairs(TraceIndex(tr))) <= t * (n - t)
