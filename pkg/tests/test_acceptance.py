"""Acceptance criteria, one test per criterion.

Each test appends a single PASS/FAIL line to the terminal summary and fails
on its own tolerance, time limits included. The conftest moves this module to
the end of the run so the D-soundness screen has seen every trace.
"""

from __future__ import annotations

import hashlib
import os
import subprocess
import sys
import time
from itertools import combinations
from random import Random

import numpy as np
import pytest

import conftest
import oracles
from svssba import BOT, RunConfig, detect_shun_start, run_simulation
from svssba.campaigns import ALL_STRATEGIES, SHARING_STRATEGIES, Tally, digest, faulty_set, sweep
from svssba.dmm import MW, SessionId
from svssba.explore import explore_broadcast
from svssba.field import Fit, interpolate_bipoly, interpolate_unipoly
from svssba.properties import TraceIndex, check_campaign, check_trace, shun_pairs

PRIMES = (5, 7, 11, 13)
SHARING_GROUPS = ["d-soundness", "tuple-liveness", "eventual-delivery", "mw", "svss"]
BROADCAST_STRATEGIES = ("honest", "fifo", "crash", "delay-one", "equivocating-dealer")

# filled by the sharing sweep, replayed by the determinism check
DIGESTS: dict[tuple, str] = {}


def report(number: int, ok: bool, text: str, elapsed: float | None = None) -> None:
    took = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    line = f"[criterion {number}] {'PASS' if ok else 'FAIL'} {text}{took}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)


def _t(n: int) -> int:
    return (n - 1) // 3


# ---- 1: field oracles ----------------------------------------------------------
def _uni_exact(p: int, t: int, xs) -> int:
    """Every y-vector on ``xs`` must interpolate to the enumerated preimage."""
    coeffs = oracles.all_vectors(p, t + 1)
    ys = (coeffs @ oracles.uni_monomials(xs, t, p).T) % p
    assert len({tuple(r) for r in ys.tolist()}) == len(coeffs), "evaluation map should be a bijection"
    bad = 0
    for c, y in zip(coeffs.tolist(), ys.tolist()):
        got = interpolate_unipoly(list(zip(xs, y)), t, p)
        bad += isinstance(got, Fit) or list(got.coeffs) != c
    return bad


def _uni_extra(p: int, t: int, xs) -> int:
    """t+2 points: consistent exactly when the vector is in the image."""
    mono = oracles.uni_monomials(xs, t, p)
    image = {tuple(r): c for r, c in zip(((oracles.all_vectors(p, t + 1) @ mono.T) % p).tolist(), oracles.all_vectors(p, t + 1).tolist())}
    bad = 0
    for y in oracles.all_vectors(p, len(xs)).tolist():
        got = interpolate_unipoly(list(zip(xs, y)), t, p)
        want = image.get(tuple(y))
        if want is None:
            bad += got is not Fit.INCONSISTENT
        else:
            bad += isinstance(got, Fit) or list(got.coeffs) != want
    return bad


def _random_constraints(rng: Random, p: int, t: int, coeffs: np.ndarray):
    size = (t + 1) ** 2
    k = rng.randint(1, size + 3)
    cells = rng.sample([(x, y) for x in range(p) for y in range(p)], k)
    mono = oracles.bi_monomials(cells, t, p)
    style = rng.choice(("exact", "perturbed", "random"))
    if style == "random":
        values = [rng.randrange(p) for _ in cells]
    else:
        f = np.array([rng.randrange(p) for _ in range(size)], dtype=np.int64)
        values = ((mono @ f) % p).tolist()
        if style == "perturbed":
            i = rng.randrange(k)
            values[i] = (values[i] + rng.randrange(1, p)) % p
    return cells, mono, values


def _package_fit(cells, values, t, p):
    got = interpolate_bipoly([(x, y, v) for (x, y), v in zip(cells, values)], t, p)
    if got is Fit.INCONSISTENT:
        return oracles.INCONSISTENT
    if got is Fit.UNDERDETERMINED:
        return oracles.UNDERDETERMINED
    return tuple(c for row in got.coeffs for c in row)


def test_criterion_1_field_oracles():
    start = time.perf_counter()
    rng = Random(20240601)
    counts = {"uni": 0, "uni-extra": 0, "bi-brute": 0, "bi-sympy": 0}
    bad = 0
    for p in PRIMES:
        for t in (0, 1, 2):
            for xs in combinations(range(p), t + 1):
                bad += _uni_exact(p, t, xs)
                counts["uni"] += p ** (t + 1)
            extra_sets = list(combinations(range(p), t + 2))
            if p ** (t + 2) * len(extra_sets) > 1_000_000:
                extra_sets = rng.sample(extra_sets, 4)
            for xs in extra_sets:
                bad += _uni_extra(p, t, xs)
                counts["uni-extra"] += p ** (t + 2)
        # bivariate: enumeration wherever the coefficient space fits in memory
        for t in (0, 1, 2):
            size = (t + 1) ** 2
            if p ** size <= 2_000_000:
                coeffs = oracles.all_vectors(p, size)
                for _ in range(150 if t < 2 else 60):
                    cells, mono, values = _random_constraints(rng, p, t, coeffs)
                    bad += _package_fit(cells, values, t, p) != oracles.brute_fit(coeffs, mono, values, p)
                    counts["bi-brute"] += 1
                # full round trip on one (t+1)x(t+1) grid for every polynomial
                if p ** size <= 30_000:
                    cells = [(x, y) for x in range(1, t + 2) for y in range(1, t + 2)]
                    mono = oracles.bi_monomials(cells, t, p)
                    for c, v in zip(coeffs.tolist(), ((coeffs @ mono.T) % p).tolist()):
                        bad += _package_fit(cells, v, t, p) != tuple(c)
                        counts["bi-brute"] += 1
            else:
                for _ in range(80):
                    cells, mono, values = _random_constraints(rng, p, t, None)
                    bad += _package_fit(cells, values, t, p) != oracles.sympy_fit(mono, values, p)
                    counts["bi-sympy"] += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    report(1, ok, f"field oracles: {bad} mismatches over {counts}", elapsed)
    assert bad == 0
    assert elapsed < 60


# ---- 2: broadcast ----------------------------------------------------------------
def test_criterion_2_broadcast():
    start = time.perf_counter()
    explored = {}
    for protocol in ("wrb", "rb"):
        for split in (True, False):
            res = explore_broadcast(protocol, 4, 1, split=split)
            explored[(protocol, split)] = (res.holds, res.states)
    tallies = {}
    for protocol in ("wrb", "rb"):
        for n in (4, 7, 10):
            t = _t(n)
            tally = Tally()
            for seed in range(1000):
                strategy = BROADCAST_STRATEGIES[seed % len(BROADCAST_STRATEGIES)]
                cfg = RunConfig(
                    protocol=protocol, n=n, t=t, faulty=faulty_set(n, t, seed, strategy), adversary=strategy,
                    seed=seed, dealer=1 + seed % n, rb_mode="bracha", trace_level="summary",
                )
                tally.add(cfg, check_trace(run_simulation(cfg), ["broadcast", "d-soundness", "eventual-delivery"]))
            tallies[(protocol, n)] = tally
    elapsed = time.perf_counter() - start
    search_ok = all(h for h, _ in explored.values())
    sweep_ok = all(t.ok for t in tallies.values())
    states = sum(s for _, s in explored.values())
    bad = {k: t.summary() for k, t in tallies.items() if not t.ok}
    ok = search_ok and sweep_ok and elapsed < 300
    report(2, ok, f"broadcast: exhaustive n=4 search over {states} states holds={search_ok}; "
                  f"6000 random runs, failures {bad or 'none'}", elapsed)
    assert search_ok, explored
    assert sweep_ok, bad
    assert elapsed < 300


# ---- 3: sharing property suites ---------------------------------------------------
def test_criterion_3_sharing_properties():
    start = time.perf_counter()
    tallies = {}
    for protocol in ("mwsvss", "svss"):
        for n in (4, 7):
            tally = Tally()
            for cfg, tr in sweep(protocol, n, SHARING_STRATEGIES, range(500), trace_level="summary"):
                tally.add(cfg, check_trace(tr, SHARING_GROUPS))
                if cfg.seed % 10 == 0:
                    DIGESTS[(protocol, n, cfg.adversary, cfg.seed)] = digest(tr)
            tallies[(protocol, n)] = tally
    elapsed = time.perf_counter() - start
    runs = sum(t.runs for t in tallies.values())
    bad = {k: t.summary() for k, t in tallies.items() if not t.ok}
    ok = not bad and elapsed < 900
    report(3, ok, f"sharing suites: {runs} traces, failures {bad or 'none'}", elapsed)
    assert not bad, bad
    assert elapsed < 900


# ---- 4: the scripted split-output scenario -------------------------------------------
def test_criterion_4_example_regression():
    start = time.perf_counter()
    cfg = RunConfig(protocol="mwsvss", n=4, t=1, faulty=(2,), adversary="example1", seed=7, dealer=2, moderator=1)
    tr = run_simulation(cfg)
    sess = SessionId(MW, 1, 2)
    outputs = [(e[1], e[2], e[4]) for e in tr.events if e[0] == "output" and e[2] in cfg.honest]
    shuns = [(e[1], e[2], tuple(e[4])) for e in tr.events if e[0] == "shun-add" and e[2] in cfg.honest]
    expected_outputs = [(32, 3, 964077805), (40, 1, 964077804), (66, 4, 1679905686)]
    checks = {
        "outputs": outputs == expected_outputs,
        "distinct": outputs[0][2] != outputs[1][2] and BOT not in (outputs[0][2], outputs[1][2]),
        "shun after outputs": shuns == [(45, 1, (2, "deal", 1))] and shuns[0][0] > outputs[1][0],
        "shun start": detect_shun_start(tr, 1, 2) is sess,
        "status": tr.status == "terminated",
        "checkers": all(v.holds for v in check_trace(tr)),
    }
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 1
    report(4, ok, f"split outputs then 2 enters D_1 in {sess.path}: {checks}", elapsed)
    assert all(checks.values()), (checks, outputs, shuns)
    assert elapsed < 1


# ---- 5: coin bias and Byzantine coin consistency ---------------------------------------
def _scc(n: int, seed: int, **kw):
    mode = "real" if n == 4 else "ideal"
    return RunConfig(protocol="scc", n=n, t=_t(n), seed=seed, svss_mode=mode, trace_level="summary", **kw)


def test_criterion_5_coin():
    start = time.perf_counter()
    verdicts = {}
    for n in (4, 7):
        verdicts[n] = check_campaign((run_simulation(_scc(n, s)) for s in range(4000)), bound=0.25, slack=0.02)
    # the criterion asks for consistency-or-shun; termination is reported, not judged
    byz, liveness = Tally(), Tally()
    for n, seeds in ((4, 25), (7, 50)):
        for strategy in ALL_STRATEGIES[1:]:
            for seed in range(seeds):
                cfg = _scc(n, seed, faulty=faulty_set(n, _t(n), seed, strategy), adversary=strategy, drain=True)
                got = check_trace(run_simulation(cfg), ["coin", "d-soundness"])
                byz.add(cfg, [v for v in got if v.name != "coin-termination"])
                liveness.add(cfg, [v for v in got if v.name == "coin-termination"])
    elapsed = time.perf_counter() - start
    bias_ok = all(v.holds for v in verdicts.values())
    ok = bias_ok and byz.ok and elapsed < 1800
    text = "; ".join(f"n={n} {v.explanation}" for n, v in verdicts.items())
    report(5, ok, f"coin bias (>= 0.23): {text}; byzantine: {byz.summary()}; "
                  f"termination (informational): {liveness.summary()}", elapsed)
    assert bias_ok, text
    assert byz.ok, byz.summary()
    assert elapsed < 1800


# ---- 6 and 7: agreement campaigns ---------------------------------------------------------
@pytest.fixture(scope="module")
def ba_campaign():
    start = time.perf_counter()
    tally, max_pairs, budgets, statuses = Tally(), {}, {}, {}
    for n in (4, 7):
        mode = "real" if n == 4 else "ideal"
        budgets[n] = _t(n) * (n - _t(n))
        max_pairs[n] = 0
        for cfg, tr in sweep("ba", n, ALL_STRATEGIES, range(500), svss_mode=mode, trace_level="summary"):
            idx = TraceIndex(tr)
            tally.add(cfg, check_trace(idx, ["ba"]))
            statuses[tr.status] = statuses.get(tr.status, 0) + 1
            max_pairs[n] = max(max_pairs[n], len(shun_pairs(idx)))
    return tally, max_pairs, budgets, statuses, time.perf_counter() - start


def test_criterion_6_ba_safety(ba_campaign):
    tally, _, _, statuses, elapsed = ba_campaign
    safety = {k: v for k, v in tally.failures.items() if k in ("ba-agreement", "ba-validity")}
    other = sorted(k for k in tally.failures if k not in safety)
    report(6, not safety, f"BA: {tally.runs} runs {statuses}, agreement/validity violations {safety or 'none'}; "
                          f"other failed properties {other or 'none'}", elapsed)
    assert not safety, safety


def test_criterion_7_shun_budget(ba_campaign):
    _, max_pairs, budgets, _, _ = ba_campaign
    ok = all(max_pairs[n] <= budgets[n] for n in budgets)
    report(7, ok, f"shun pairs per BA run: max {max_pairs} against t(n-t) {budgets}")
    assert ok


# ---- 9: determinism ----------------------------------------------------------------------
def _cli_trace_bytes(out_dir, hash_seed: str) -> dict[str, bytes]:
    env = dict(os.environ, PYTHONHASHSEED=hash_seed)
    cmd = [sys.executable, "-m", "svssba", "--protocol", "svss", "--n", "4", "--seeds", "0..5",
           "--adversary", "equivocating-dealer", "--faulty", "3", "--trace-out", str(out_dir), "--quiet"]
    subprocess.run(cmd, check=True, env=env, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())}


def test_criterion_9_determinism(tmp_path):
    start = time.perf_counter()
    if not DIGESTS:
        for protocol in ("mwsvss", "svss"):
            for n in (4, 7):
                for cfg, tr in sweep(protocol, n, SHARING_STRATEGIES, range(0, 500, 10), trace_level="summary"):
                    DIGESTS[(protocol, n, cfg.adversary, cfg.seed)] = digest(tr)
    mismatched = []
    for (protocol, n, strategy, seed), want in sorted(DIGESTS.items()):
        (tr_cfg, tr), = sweep(protocol, n, [strategy], [seed], trace_level="summary")
        path = tmp_path / "again.log"
        tr.write(path)
        if hashlib.sha256(path.read_bytes()).hexdigest() != want:
            mismatched.append((protocol, n, strategy, seed))
    first = _cli_trace_bytes(tmp_path / "a", "1")
    second = _cli_trace_bytes(tmp_path / "b", "4242")
    cli_same = first == second and len(first) > 1
    elapsed = time.perf_counter() - start
    ok = not mismatched and cli_same
    report(9, ok, f"determinism: {len(DIGESTS)} campaign traces re-run, {len(mismatched)} differ; "
                  f"CLI trace files identical across hash seeds: {cli_same}", elapsed)
    assert not mismatched, mismatched[:5]
    assert cli_same


# ---- 8: D-soundness over everything the suite produced ------------------------------------
def test_criterion_8_d_soundness():
    seen, bad = conftest.SEEN["traces"], conftest.SEEN["bad"]
    ok = seen > 0 and not bad
    report(8, ok, f"D-soundness: {seen} traces screened, {len(bad)} honest-in-D events")
    assert seen > 0
    assert not bad, bad[:3]
