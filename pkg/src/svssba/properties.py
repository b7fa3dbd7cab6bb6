"""Trace checkers for the protocol guarantees.

Every checker is a pure function of a :class:`~svssba.sim.Trace` and returns
:class:`PropertyVerdict` objects. Witnesses are indices into
``trace.events``. Checkers accept traces straight from a run or parsed back
from disk; the latter carry lists where the former carry tuples and string
keys where the former carry ints, so lookups normalise both.

Most guarantees are conditional ("or some nonfaulty process shuns someone
starting in that session"); the shun side is decided with
:class:`~svssba.sim.ShunView`. Liveness claims are only judged on runs that
settled: quiescent, or terminated with no nonfaulty traffic left in flight.
Coin bias is a property of many runs and has its own entry point,
:func:`check_campaign`.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from statistics import mean
from typing import Callable, Iterable

from .dmm import BA, BCAST, COIN, MW, ROUND, SVSS, SessionId
from .field import INCONSISTENT, UNDERDETERMINED, interpolate_bipoly, interpolate_unipoly
from .sim import BOT, ShunView, Trace


class StatisticalPropertyError(ValueError):
    """A campaign-level property was requested on a single trace."""


@dataclass(frozen=True)
class PropertyVerdict:
    name: str
    holds: bool
    witness: tuple[int, ...] = ()
    explanation: str = ""
    seed: int | None = None

    def __bool__(self) -> bool:
        return self.holds

    def line(self) -> str:
        mark = "PASS" if self.holds else "FAIL"
        tail = f" ({self.explanation})" if self.explanation else ""
        return f"{mark} {self.name}{tail}"


def _int_keys(d) -> dict:
    return {int(k): v for k, v in d.items()}


def _horner(coeffs, x, p):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


@dataclass
class _Session:
    inputs: dict = field(default_factory=dict)      # role -> (pid, value, idx)
    outputs: dict = field(default_factory=dict)     # pid -> (value, idx)
    shared: dict = field(default_factory=dict)      # pid -> (idx, detail)
    recon: dict = field(default_factory=dict)       # pid -> idx
    poly: dict = field(default_factory=dict)        # pid -> detail
    started: dict = field(default_factory=dict)     # pid -> idx
    completed: dict = field(default_factory=dict)   # pid -> idx
    fixed: dict = field(default_factory=dict)       # pid -> idx (coin)


class TraceIndex:
    """One pass over a trace, grouped by session."""

    def __init__(self, trace: Trace):
        cfg = trace.config
        self.trace = trace
        self.cfg = cfg
        self.n, self.t, self.p = cfg.n, cfg.t, cfg.prime
        self.faulty = frozenset(cfg.faulty)
        self.honest = frozenset(cfg.honest)
        self.sessions: dict[SessionId, _Session] = defaultdict(_Session)
        self.shun_adds: list[int] = []
        self.to_faulty: list[int] = []
        self.halted: dict[int, int] = {}
        self.decides: dict[int, tuple[int, int, int]] = {}
        self.grades: dict[tuple[int, int], tuple] = {}
        self.ba_inputs: dict[int, int] = {}
        self.round_caps: list[int] = []
        self.status = trace.status
        self.pending_honest = 0
        self._views: dict[int, ShunView] = {}
        honest = self.honest
        sessions = self.sessions
        for idx, (kind, _, pid, sess, detail) in enumerate(trace.events):
            if kind == "deliver":
                if pid in self.faulty:
                    self.to_faulty.append(idx)
                continue
            if kind in ("send", "forward", "delay", "discard", "tuple-add", "tuple-remove", "malformed"):
                continue
            if kind == "session-start":
                sessions[sess].started[pid] = idx
            elif kind == "session-complete":
                sessions[sess].completed[pid] = idx
            elif kind == "output":
                sessions[sess].outputs[pid] = (detail, idx)
            elif kind == "share-complete":
                sessions[sess].shared[pid] = (idx, detail)
            elif kind == "recon-start":
                sessions[sess].recon[pid] = idx
            elif kind == "poly":
                sessions[sess].poly[pid] = detail
            elif kind == "coin-fix":
                sessions[sess].fixed[pid] = idx
            elif kind == "input":
                if sess.kind == BA:
                    self.ba_inputs[pid] = detail["input"]
                else:
                    role = detail["role"]
                    sessions[sess].inputs[role] = (pid, detail.get("secret", detail.get("value")), idx)
            elif kind == "shun-add":
                if pid in honest:
                    self.shun_adds.append(idx)
            elif kind == "halt":
                self.halted[pid] = idx
            elif kind == "decide":
                self.decides[pid] = (detail["value"], detail["round"], idx)
            elif kind == "grade":
                self.grades[(pid, sess.c)] = (tuple(detail), idx)
            elif kind == "round-cap":
                self.round_caps.append(idx)
            elif kind == "status":
                self.pending_honest = detail["pending_honest"]

    @property
    def live(self) -> frozenset:
        """Nonfaulty processes that never halted."""
        return self.honest - set(self.halted)

    @property
    def settled(self) -> bool:
        return self.status == "quiescent" or (self.status == "terminated" and self.pending_honest == 0)

    def of_kind(self, kind: int) -> list[SessionId]:
        return [s for s in self.sessions if s.kind == kind]

    def view(self, i: int) -> ShunView:
        v = self._views.get(i)
        if v is None:
            v = self._views[i] = ShunView(self.trace, i)
        return v

    def shun_in(self, session: SessionId) -> tuple[int, int] | None:
        """Some (nonfaulty i, faulty j) such that i shuns j starting in ``session``.

        A shun whose start session is nested inside ``session`` counts too:
        a child can complete after its parent, so the parent itself may not
        qualify even though the shun began inside it.
        """
        info = self.sessions.get(session)
        for i in sorted(self.honest):
            view = self.view(i)
            done = info is not None and i in info.completed
            for j in sorted(view.pinned):
                if j not in self.faulty:
                    continue
                if done and view.shunned_in(j, session):
                    return i, j
                start = view.shun_start(j)
                if start is not None and start.within(session):
                    return i, j
        return None

    def honest_input(self, session: SessionId, role: str):
        got = self.sessions[session].inputs.get(role)
        if got is None or got[0] not in self.honest:
            return None
        return got


def _verdict(idx: TraceIndex, name: str, failures: list) -> PropertyVerdict:
    seed = idx.cfg.seed
    if not failures:
        return PropertyVerdict(name, True, seed=seed)
    witness, why = failures[0]
    more = f" (+{len(failures) - 1} more)" if len(failures) > 1 else ""
    return PropertyVerdict(name, False, tuple(witness), why + more, seed)


def _skipped(idx: TraceIndex, name: str, why: str) -> PropertyVerdict:
    return PropertyVerdict(name, True, (), f"not judged: {why}", idx.cfg.seed)


# ---- shunning and delivery ------------------------------------------------
def check_d_soundness(idx: TraceIndex) -> list[PropertyVerdict]:
    events = idx.trace.events
    bad = [([i], f"{events[i][2]} added nonfaulty {events[i][4][0]} to D") for i in idx.shun_adds if events[i][4][0] in idx.honest]
    return [_verdict(idx, "d-soundness", bad)]


def _fenwick_count_greater(pairs, budget):
    """For (send step, deliver step) pairs in send order, count violations of
    deliver <= send + budget + (earlier envelopes still undelivered then)."""
    steps = sorted({d for _, d in pairs})
    pos = {d: k + 1 for k, d in enumerate(steps)}
    tree = [0] * (len(steps) + 1)

    def add(k):
        while k <= len(steps):
            tree[k] += 1
            k += k & -k

    def prefix(k):
        s = 0
        while k > 0:
            s += tree[k]
            k -= k & -k
        return s

    import bisect

    bad = []
    for n_before, (sent, dlv) in enumerate(pairs):
        due = sent + budget
        # earlier envelopes delivered strictly after ``due`` still block this one
        k = bisect.bisect_right(steps, due)
        backlog = n_before - prefix(k)
        if dlv > due + backlog + 1:
            bad.append((n_before, sent, dlv, backlog))
        add(pos[dlv])
    return bad


def check_eventual_delivery(idx: TraceIndex) -> list[PropertyVerdict]:
    name = "eventual-delivery"
    if idx.status == "cutoff":
        return [_skipped(idx, name, "run hit max_events")]
    if idx.status == "quiescent" and idx.pending_honest:
        return [_verdict(idx, name, [([], f"{idx.pending_honest} nonfaulty envelopes stuck at quiescence")])]
    if idx.cfg.trace_level != "full":
        return [_verdict(idx, name, [])]
    sent, got = {}, {}
    faulty = idx.faulty
    for k, (kind, step, pid, _, detail) in enumerate(idx.trace.events):
        if kind == "send":
            eid, dst = detail[0], detail[1]
            if pid not in faulty and dst not in faulty and pid != dst:
                sent[eid] = (step, k)
        elif kind == "deliver" and detail[0] in sent:
            got[detail[0]] = step
    order = sorted(e for e in sent if e in got)
    bad = _fenwick_count_greater([(sent[e][0], got[e]) for e in order], idx.cfg.budget)
    fails = [([sent[order[b[0]]][1]], f"envelope sent at step {b[1]} delivered at {b[2]} past its fairness deadline") for b in bad]
    if idx.settled:
        for e in sent:
            if e not in got:
                fails.append(([sent[e][1]], "nonfaulty envelope never delivered"))
                break
    return [_verdict(idx, name, fails)]


def check_tuple_liveness(idx: TraceIndex) -> list[PropertyVerdict]:
    """No expected broadcast of a nonfaulty process stays outstanding in a
    session every nonfaulty process completed."""
    name = "tuple-liveness"
    if not idx.settled:
        return [_skipped(idx, name, f"run {idx.status}")]
    honest = idx.honest
    outstanding: dict[tuple, int] = {}
    for k, (kind, _, pid, sess, detail) in enumerate(idx.trace.events):
        if kind == "tuple-add" and pid in honest and detail[1] in honest:
            outstanding[(pid, detail[0], detail[1], detail[2], sess)] = k
        elif kind == "tuple-remove":
            outstanding.pop((pid, detail[0], detail[1], detail[2], sess), None)
    fails = []
    for (i, which, j, l, sess), k in outstanding.items():
        if i in idx.halted:
            continue
        done = idx.sessions[sess].completed
        if all(h in done for h in honest):
            fails.append(([k], f"{i} still expects a {which} broadcast from nonfaulty {j} in {sess.path}"))
    return [_verdict(idx, name, fails)]


# ---- broadcast -------------------------------------------------------------
def check_broadcast(idx: TraceIndex) -> list[PropertyVerdict]:
    sessions = idx.of_kind(BCAST)
    if not sessions:
        return []
    agree, valid, total = [], [], []
    honest, live = idx.honest, idx.live
    for sess in sessions:
        info = idx.sessions[sess]
        outs = {pid: v for pid, v in info.outputs.items() if pid in honest}
        if len({v for v, _ in outs.values()}) > 1:
            agree.append(([k for _, k in outs.values()], f"nonfaulty processes accepted different values in {sess.path}"))
        dealer = idx.honest_input(sess, "dealer")
        if dealer is not None:
            wrong = [k for v, k in outs.values() if v != dealer[1]]
            if wrong:
                valid.append((wrong, f"accepted value differs from the nonfaulty dealer's in {sess.path}"))
            elif idx.settled and not live <= set(outs):
                valid.append(([dealer[2]], f"nonfaulty dealer's value not accepted everywhere in {sess.path}"))
        if idx.settled and outs and not live <= set(outs):
            total.append(([k for _, k in outs.values()], f"some but not all nonfaulty processes accepted in {sess.path}"))
    out = [_verdict(idx, "broadcast-agreement", agree), _verdict(idx, "broadcast-validity", valid)]
    if idx.cfg.protocol == "rb" or idx.cfg.rb_mode == "bracha":
        out.append(_verdict(idx, "broadcast-totality", total) if idx.settled else _skipped(idx, "broadcast-totality", idx.status))
    return out


# ---- sharing: common parts -------------------------------------------------
def _termination(idx: TraceIndex, kind: int, prefix: str, moderated: bool) -> list[PropertyVerdict]:
    name = f"{prefix}-termination"
    if not idx.settled:
        return [_skipped(idx, name, f"run {idx.status}")]
    honest, live = idx.honest, idx.live
    fails = []
    for sess in idx.of_kind(kind):
        info = idx.sessions[sess]
        shared = {pid for pid in info.shared if pid in honest}
        if shared and not live <= shared:
            missing = sorted(live - shared)
            fails.append(([info.shared[min(shared)][0]], f"{sess.path}: share finished at {sorted(shared)} but not at {missing}"))
        if honest <= set(info.recon):
            outs = {pid for pid in info.outputs if pid in honest}
            if not live <= outs:
                fails.append(([max(info.recon.values())], f"{sess.path}: every nonfaulty process reconstructs, {sorted(live - outs)} never output"))
        dealer = idx.honest_input(sess, "dealer")
        if dealer is None or not honest <= set(info.started):
            continue
        if moderated:
            mod = idx.honest_input(sess, "moderator")
            if mod is None or mod[1] != dealer[1]:
                continue
        if not live <= shared:
            fails.append(([dealer[2]], f"{sess.path}: nonfaulty dealer but share never finished at {sorted(live - shared)}"))
    return [_verdict(idx, name, fails)]


def _or_shun(idx: TraceIndex, sess: SessionId, witness, why, fails) -> None:
    if idx.shun_in(sess) is None:
        fails.append((witness, why))


def _hiding(idx: TraceIndex, kind: int, prefix: str, points_of) -> list[PropertyVerdict]:
    """Count what faulty processes learned before any nonfaulty process
    began reconstructing; ``points_of`` maps one delivery to the evaluation
    points of the secret polynomial it reveals."""
    name = f"{prefix}-hiding"
    events = idx.trace.events
    honest = idx.honest
    fails = []
    cutoff = {}
    for sess in idx.of_kind(kind):
        info = idx.sessions[sess]
        if idx.honest_input(sess, "dealer") is None:
            continue
        if kind == MW and idx.honest_input(sess, "moderator") is None:
            continue
        first = min((k for pid, k in info.recon.items() if pid in honest), default=len(events))
        cutoff[sess] = (first, set(), [])
    if not cutoff:
        return [_verdict(idx, name, [])] if idx.of_kind(kind) else []
    for k in idx.to_faulty:
        if not cutoff:
            break
        sess = events[k][3]
        root = sess
        while root is not None and root not in cutoff:
            root = root.parent
        if root is None or k > cutoff[root][0]:
            continue
        pts = points_of(idx, events[k], root)
        if pts:
            cutoff[root][1].update(pts)
            cutoff[root][2].append(k)
    for sess, (_, pts, ks) in cutoff.items():
        if len(pts) > idx.t:
            fails.append((ks, f"{sess.path}: faulty processes saw {len(pts)} evaluations of the dealer's polynomial before reconstruction"))
    return [_verdict(idx, name, fails)]


def _payload_kind(payload):
    if payload[0] == "P":
        return payload[2]
    return payload[1][2]


# ---- moderated weak sharing -------------------------------------------------
def _mw_points(idx, event, root):
    _, _, dst, sess, detail = event
    if sess != root:
        return ()
    kind = _payload_kind(detail[2])
    if kind == "ROW_POLY":
        return {dst}
    if kind == "F_POLY":
        # the whole secret polynomial
        return {("f", x) for x in range(idx.t + 1)}
    return ()


def check_mw(idx: TraceIndex) -> list[PropertyVerdict]:
    sessions = idx.of_kind(MW)
    if not sessions:
        return []
    honest = idx.honest
    p, t = idx.p, idx.t
    validity, binding = [], []
    for sess in sessions:
        info = idx.sessions[sess]
        outs = {pid: vk for pid, vk in info.outputs.items() if pid in honest}
        if not outs:
            continue
        dealer = idx.honest_input(sess, "dealer")
        if dealer is not None:
            wrong = [k for v, k in outs.values() if v != dealer[1]]
            if wrong:
                _or_shun(idx, sess, wrong, f"{sess.path}: output differs from the nonfaulty dealer's secret and nobody shuns", validity)
        first = min((rec for pid, rec in info.shared.items() if pid in honest), key=lambda r: r[0], default=None)
        if first is None:
            continue
        M = first[1]["M"]
        H = [l for l in M if l in honest]
        pts = [(l, info.poly[l]["f0"]) for l in H if l in info.poly]
        fit = interpolate_unipoly(pts, t, p) if len(pts) > t else UNDERDETERMINED
        r = BOT if fit is INCONSISTENT or fit is UNDERDETERMINED else fit(0)
        mod = idx.honest_input(sess, "moderator")
        if mod is not None and r != mod[1]:
            binding.append(([first[0]], f"{sess.path}: sharing fixed {r}, not the nonfaulty moderator's value {mod[1]}"))
            continue
        # weak binding: r or BOT everywhere, unless a shun starts here
        wrong = [k for v, k in outs.values() if v != r and v is not BOT]
        if wrong:
            _or_shun(idx, sess, wrong, f"{sess.path}: output other than {r} or BOT and nobody shuns", binding)
    return [
        *_termination(idx, MW, "mw", moderated=True),
        _verdict(idx, "mw-validity-or-shun", validity),
        _verdict(idx, "mw-binding-or-shun", binding),
        *_hiding(idx, MW, "mw", _mw_points),
    ]


# ---- shunning VSS ----------------------------------------------------------
def svss_oracle(idx: TraceIndex, sess: SessionId):
    """Value the sharing phase of ``sess`` fixed, from nonfaulty rows only.

    Takes G from the first nonfaulty process to finish sharing and keeps the
    entries f(j, l) and f(l, j) that the nonfaulty members j of G received
    from the dealer, for l in G_j. Returns their unique degree-t bivariate
    fit at (0, 0), or BOT if they do not pin one down.
    """
    info = idx.sessions[sess]
    honest, p, t = idx.honest, idx.p, idx.t
    first = min((rec for pid, rec in info.shared.items() if pid in honest), key=lambda r: r[0], default=None)
    if first is None or first[1] is None:
        return None
    gs = _int_keys(first[1]["Gs"])
    entries: dict[tuple[int, int], int] = {}
    for j in first[1]["G"]:
        if j not in honest or j not in info.poly:
            continue
        g, h = info.poly[j]["g"], info.poly[j]["h"]
        for l in gs[j]:
            for key, val in (((j, l), _horner(g, l, p)), ((l, j), _horner(h, l, p))):
                if entries.setdefault(key, val) != val:
                    return BOT
    fit = interpolate_bipoly([(a, b, v) for (a, b), v in entries.items()], t, p)
    if fit is INCONSISTENT or fit is UNDERDETERMINED:
        return BOT
    return fit(0, 0)


def _svss_points(idx, event, root):
    _, _, dst, sess, detail = event
    payload = detail[2]
    if sess == root:
        return {("row", dst)} if _payload_kind(payload) == "BIPOLY" else ()
    # sub-sessions between two nonfaulty endpoints must stay hidden too
    if sess.kind == MW and sess.parent == root and _payload_kind(payload) in ("ROW_POLY", "F_POLY", "F0"):
        return {("child", sess.c, dst)}
    return ()


def _svss_hiding(idx: TraceIndex) -> list[PropertyVerdict]:
    name = "svss-hiding"
    fails = []
    events = idx.trace.events
    honest = idx.honest
    for sess in idx.of_kind(SVSS):
        info = idx.sessions[sess]
        if idx.honest_input(sess, "dealer") is None or not info.poly:
            continue
        first = min((k for pid, k in info.recon.items() if pid in honest), default=len(events))
        rows = set()
        for k in idx.to_faulty:
            if k > first:
                break
            ev = events[k]
            if ev[3] != sess or _payload_kind(ev[4][2]) != "BIPOLY":
                continue
            rows.add(ev[2])
        if not rows <= idx.faulty or len(rows) > idx.t:
            fails.append(([], f"{sess.path}: faulty processes hold rows {sorted(rows)} before reconstruction"))
    return [_verdict(idx, name, fails)]


def check_svss(idx: TraceIndex) -> list[PropertyVerdict]:
    sessions = [s for s in idx.of_kind(SVSS) if idx.sessions[s].poly or idx.sessions[s].shared]
    if not sessions:
        return []
    honest = idx.honest
    validity, binding = [], []
    real = idx.cfg.svss_mode == "real"
    for sess in sessions:
        info = idx.sessions[sess]
        outs = {pid: vk for pid, vk in info.outputs.items() if pid in honest}
        if not outs:
            continue
        dealer = idx.honest_input(sess, "dealer")
        if dealer is not None:
            wrong = [k for v, k in outs.values() if v != dealer[1]]
            if wrong:
                _or_shun(idx, sess, wrong, f"{sess.path}: output differs from the nonfaulty dealer's secret and nobody shuns", validity)
        if real:
            r = svss_oracle(idx, sess)
            if r is None:
                continue
            wrong = [k for v, k in outs.values() if v != r]
            if wrong:
                _or_shun(idx, sess, wrong, f"{sess.path}: outputs differ from the value fixed by the sharing phase ({r}) and nobody shuns", binding)
        elif len({v for v, _ in outs.values()}) > 1:
            binding.append(([k for _, k in outs.values()], f"{sess.path}: ideal sharing produced different outputs"))
    return [
        *_termination(idx, SVSS, "svss", moderated=False),
        _verdict(idx, "svss-validity-or-shun", validity),
        _verdict(idx, "svss-binding-or-shun", binding),
        *(_svss_hiding(idx) if real else []),
    ]


# ---- common coin -----------------------------------------------------------
def check_coin(idx: TraceIndex) -> list[PropertyVerdict]:
    coins = idx.of_kind(COIN)
    if not coins:
        return []
    honest = idx.honest
    events = idx.trace.events
    term, consistent, secrecy = [], [], []
    ba = idx.cfg.protocol == "ba"
    for coin in coins:
        info = idx.sessions[coin]
        outs = {pid: vk for pid, vk in info.outputs.items() if pid in honest}
        if not ba:
            missing = sorted(honest - set(outs))
            if missing:
                term.append(([min(info.started.values(), default=0)], f"{coin.path}: no coin output at {missing} (run {idx.status})"))
        # the coin itself may split; the secrets behind it may not
        for sess in idx.of_kind(SVSS):
            if sess.parent != coin:
                continue
            souts = {pid: vk for pid, vk in idx.sessions[sess].outputs.items() if pid in honest}
            values = {v for v, _ in souts.values()}
            dealer = idx.honest_input(sess, "dealer")
            if len(values) > 1 or (dealer is not None and values and values != {dealer[1]}):
                _or_shun(idx, coin, [k for _, k in souts.values()], f"{sess.path}: secret reconstructed inconsistently and nobody shuns", consistent)
                break
    # reconstruction inside a coin may begin only after that process fixed H
    for k, (kind, _, pid, sess, _) in enumerate(events):
        if kind != "recon-start" or pid not in honest or sess.parent is None:
            continue
        coin = sess.parent if sess.parent.kind == COIN else None
        if coin is None:
            continue
        fixed = idx.sessions[coin].fixed.get(pid)
        if fixed is None or fixed > k:
            secrecy.append(([k], f"{pid} began reconstructing {sess.path} before fixing its set"))
    out = []
    if not ba:
        out.append(_verdict(idx, "coin-termination", term))
    out += [_verdict(idx, "coin-consistency-or-shun", consistent), _verdict(idx, "coin-secrecy-ordering", secrecy)]
    return out


# ---- agreement -------------------------------------------------------------
def shun_pairs(idx: TraceIndex) -> set[tuple[int, int]]:
    """(nonfaulty i, j) with j in D_i or shunned by i for good."""
    events = idx.trace.events
    pairs = {(events[k][2], events[k][4][0]) for k in idx.shun_adds}
    for i in idx.honest:
        pairs.update((i, j) for j in idx.view(i).shunned())
    return pairs


def check_ba(idx: TraceIndex) -> list[PropertyVerdict]:
    if idx.cfg.protocol != "ba":
        return []
    honest = idx.honest
    n, t = idx.n, idx.t
    decides = {pid: d for pid, d in idx.decides.items() if pid in honest}
    agree, valid, term, budget, order, spread = [], [], [], [], [], []
    if len({d[0] for d in decides.values()}) > 1:
        agree.append(([d[2] for d in decides.values()], f"nonfaulty processes decided {sorted({d[0] for d in decides.values()})}"))
    inputs = {idx.ba_inputs.get(pid) for pid in honest}
    if len(inputs) == 1:
        b = inputs.pop()
        wrong = [d[2] for d in decides.values() if d[0] != b]
        if wrong:
            valid.append((wrong, f"all nonfaulty inputs were {b} but some process decided otherwise"))
    halted = set(idx.halted) & honest
    if halted != honest:
        why = f"{sorted(honest - halted)} never halted (run {idx.status})"
        if idx.round_caps:
            why += ", round cap hit"
        term.append((list(idx.round_caps[:1]), why))
    pairs = shun_pairs(idx)
    if len(pairs) > t * (n - t):
        budget.append(([], f"{len(pairs)} shun pairs exceed t(n-t) = {t * (n - t)}"))
    # a round starts only after the previous round's coin completed locally
    for sess, info in idx.sessions.items():
        if sess.kind != ROUND or sess.c == 1:
            continue
        coin = SessionId(COIN, sess.c - 1, 0, SessionId(ROUND, sess.c - 1, 0, sess.parent))
        done = idx.sessions[coin].completed if coin in idx.sessions else {}
        for pid, k in info.started.items():
            if pid in honest and (pid not in done or done[pid] > k):
                order.append(([k], f"{pid} started round {sess.c} before its round {sess.c - 1} coin completed"))
    if decides:
        first = min(d[1] for d in decides.values())
        late = [d[2] for d in decides.values() if d[1] > first + 1]
        if late:
            spread.append((late, f"some process decided more than one round after the first decision in round {first}"))
    return [
        _verdict(idx, "ba-agreement", agree),
        _verdict(idx, "ba-validity", valid),
        _verdict(idx, "ba-termination", term),
        _verdict(idx, "ba-shun-budget", budget),
        _verdict(idx, "ba-round-ordering", order),
        _verdict(idx, "ba-decision-spread", spread),
    ]


CHECKERS: dict[str, Callable[[TraceIndex], list[PropertyVerdict]]] = {
    "d-soundness": check_d_soundness,
    "eventual-delivery": check_eventual_delivery,
    "tuple-liveness": check_tuple_liveness,
    "broadcast": check_broadcast,
    "mw": check_mw,
    "svss": check_svss,
    "coin": check_coin,
    "ba": check_ba,
}

STATISTICAL = ("coin-bias",)


def check_trace(trace: Trace | TraceIndex, groups: Iterable[str] | None = None) -> list[PropertyVerdict]:
    """Run checker groups (default all) on one trace (or its prebuilt index)."""
    groups = list(CHECKERS) if groups is None else list(groups)
    for g in groups:
        if g in STATISTICAL:
            raise StatisticalPropertyError(f"{g} needs a campaign of traces, see check_campaign")
        if g not in CHECKERS:
            raise KeyError(f"unknown property group {g!r}")
    idx = trace if isinstance(trace, TraceIndex) else TraceIndex(trace)
    out = []
    for g in groups:
        out.extend(CHECKERS[g](idx))
    return out


def _as_index(x) -> TraceIndex:
    return x if isinstance(x, TraceIndex) else TraceIndex(x)


def violations(trace: Trace, groups: Iterable[str] | None = None) -> list[PropertyVerdict]:
    return [v for v in check_trace(trace, groups) if not v.holds]


# ---- campaigns ---------------------------------------------------------------
@dataclass(frozen=True)
class CoinTally:
    runs: int
    all_zero: int
    all_one: int
    split: int

    @property
    def p0(self) -> float:
        return self.all_zero / self.runs

    @property
    def p1(self) -> float:
        return self.all_one / self.runs


def coin_outcomes(trace) -> list[str]:
    """Per coin session: ``"zero"``/``"one"`` if every nonfaulty process
    output that bit, else ``"split"``."""
    idx = _as_index(trace)
    out = []
    for coin in idx.of_kind(COIN):
        got = idx.sessions[coin].outputs
        bits = {v for pid, (v, _) in got.items() if pid in idx.honest}
        if idx.honest <= set(got) and len(bits) == 1:
            out.append("zero" if bits == {0} else "one")
        else:
            out.append("split")
    return out


def coin_tally(traces: Iterable) -> CoinTally:
    c = Counter()
    for trace in traces:
        c.update(coin_outcomes(trace))
    runs = sum(c.values())
    if not runs:
        raise ValueError("no coin sessions in the given traces")
    return CoinTally(runs, c["zero"], c["one"], c["split"])


def check_campaign(traces: Iterable[Trace], bound: float = 0.25, slack: float = 0.0) -> PropertyVerdict:
    """Coin bias: both unanimous outcomes must reach ``bound - slack``."""
    tally = coin_tally(traces)
    ok = tally.p0 >= bound - slack and tally.p1 >= bound - slack
    why = f"P[all 0]={tally.p0:.4f} P[all 1]={tally.p1:.4f} over {tally.runs} coins"
    return PropertyVerdict("coin-bias", ok, (), why)


@dataclass(frozen=True)
class RoundStats:
    runs: int
    mean_rounds: float
    max_rounds: int
    undecided: int


def last_decision_round(trace) -> int | None:
    """Round in which the last nonfaulty process decided, None if one never did."""
    idx = _as_index(trace)
    rounds = [d[1] for pid, d in idx.decides.items() if pid in idx.honest]
    return max(rounds) if len(rounds) == len(idx.honest) else None


def ba_round_stats(rounds: Iterable) -> RoundStats:
    """Statistics over BA runs (traces or their :func:`last_decision_round`)."""
    got, runs = [], 0
    for r in rounds:
        runs += 1
        if r is not None and not isinstance(r, int):
            r = last_decision_round(r)
        if r is not None:
            got.append(r)
    if not got:
        raise ValueError("no decisions in the given traces")
    return RoundStats(runs, mean(got), max(got), runs - len(got))
