from collections import Counter
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svssba import RunConfig, run_simulation
from svssba.campaigns import ALL_STRATEGIES, faulty_set
from svssba.properties import StatisticalPropertyError, check_campaign, check_trace, coin_outcomes, coin_tally


def coin_values(tr):
    return {pid: v for (pid, s), v in tr.outputs().items() if s.parent is None}


def test_sum_of_uniform_residues_is_uniform():
    # exhaustive over u = 4 with 2 or 3 attached secrets
    for k in (2, 3):
        counts = Counter(sum(c) % 4 for c in product(range(4), repeat=k))
        assert set(counts.values()) == {4 ** k // 4}


def test_honest_real_coin_agrees():
    tr = run_simulation(RunConfig(protocol="scc", n=4, t=1, seed=3))
    assert tr.status == "terminated"
    assert len(set(coin_values(tr).values())) == 1
    assert all(v.holds for v in check_trace(tr))


def test_ideal_backend_at_seven():
    tr = run_simulation(RunConfig(protocol="scc", n=7, t=2, seed=1, svss_mode="ideal"))
    assert len(coin_values(tr)) == 7
    assert coin_outcomes(tr)[0] in ("zero", "one", "split")


def test_party_values_look_uniform():
    sums = Counter()
    for seed in range(150):
        tr = run_simulation(RunConfig(protocol="scc", n=4, t=1, seed=seed, svss_mode="ideal", trace_level="summary"))
        seen = {}
        for kind, _, pid, _, detail in tr.of_kind("coin-sum"):
            seen[detail[0]] = detail[1]
        sums.update(seen.values())
    total = sum(sums.values())
    assert set(sums) <= {0, 1, 2, 3}
    for r in range(4):
        assert abs(sums[r] / total - 0.25) < 0.06


def test_both_outcomes_occur():
    tally = coin_tally(run_simulation(RunConfig(protocol="scc", n=4, t=1, seed=s, svss_mode="ideal", trace_level="summary")) for s in range(120))
    assert tally.all_zero > 0 and tally.all_one > 0
    assert tally.runs == 120


def test_bias_needs_a_campaign():
    tr = run_simulation(RunConfig(protocol="scc", n=4, t=1, seed=0, svss_mode="ideal"))
    with pytest.raises(StatisticalPropertyError):
        check_trace(tr, ["coin-bias"])
    verdict = check_campaign([tr] * 4, bound=0.25)
    assert verdict.name == "coin-bias"


@settings(max_examples=30)
@given(st.integers(0, 100_000), st.sampled_from(ALL_STRATEGIES))
def test_byzantine_coin_is_consistent_or_shuns(seed, strategy):
    cfg = RunConfig(protocol="scc", n=4, t=1, faulty=faulty_set(4, 1, seed, strategy), adversary=strategy, seed=seed, svss_mode="ideal")
    bad = [v for v in check_trace(run_simulation(cfg), ["coin", "d-soundness"]) if not v.holds]
    assert not bad, bad[0].line()
