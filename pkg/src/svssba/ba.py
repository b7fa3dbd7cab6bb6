"""Binary Byzantine agreement driven by the shunning coin.

Each round is a graded vote followed by a coin:

1. RB ``PRE_VOTE(x)``. The first n - t pre-votes form ``A``; ``a`` is their
   majority (ties go to 0). RB ``MAIN_VOTE(A, a)``.
2. A main vote counts once every pre-vote in its ``A`` has arrived here and
   ``a`` really is their majority. The first n - t counted main votes form
   ``B``; ``b`` is the majority of their ``a`` values. RB ``FINAL_VOTE(B, b)``,
   checked the same way against main votes.
3. With n - t counted final votes ``C``: if every ``a`` in ``B`` equals s the
   grade is (s, 2); else if every ``b`` in ``C`` equals s it is (s, 1); else 0.

Grade 2 decides s and broadcasts ``DECIDE(s)``. After the vote every process
runs the round's coin: grades 1 and 2 keep s, grade 0 adopts the coin. The
next round starts only after the coin session completed locally. t + 1
``DECIDE(s)`` messages make a process adopt and echo s; n - t make it halt.

Safety sketch: two counted sets of size n - t share at least n - 2t > (n - t)/2
members, so grade 2 for s at one process forces every counted final vote to
carry s, hence grade >= 1 for s everywhere and unanimity from the next round.
"""

from __future__ import annotations

from .coin import Coin
from .dmm import BA, COIN, ROUND, SessionId

PRE_VOTE = "PRE_VOTE"
MAIN_VOTE = "MAIN_VOTE"
FINAL_VOTE = "FINAL_VOTE"
DECIDE = "DECIDE"


def majority(bits) -> int:
    bits = list(bits)
    ones = sum(bits)
    return 1 if 2 * ones > len(bits) else 0


class Round:
    def __init__(self, proc, r: int):
        self.proc = proc
        self.node = proc.node
        self.r = r
        self.sid = SessionId(ROUND, r, 0, proc.sid)
        self.n, self.t = proc.n, proc.t
        self.pre: dict[int, int] = {}
        self.main_pending: dict[int, tuple] = {}
        self.main: dict[int, int] = {}
        self.final_pending: dict[int, tuple] = {}
        self.final: dict[int, int] = {}
        self.A = self.B = self.C = None
        self.grade = None
        self.coin = None

    def begin(self, x: int) -> None:
        self.node.start_session(self.sid, self)
        value = self.node.behavior.ba_vote(self, PRE_VOTE, x)
        self.node.broadcast(self.sid, PRE_VOTE, value)

    def _set(self, body):
        n = self.n
        if type(body) is not tuple or len(body) != n - self.t or len(set(body)) != len(body):
            return None
        if not all(type(v) is int and 1 <= v <= n for v in body):
            return None
        return body

    def on_message(self, src, kind, body, via_rb):
        if not via_rb:
            self.node.malformed(self.sid, src, kind)
            return
        if kind == PRE_VOTE and body in (0, 1) and src not in self.pre:
            self.pre[src] = body
            self._progress()
        elif kind in (MAIN_VOTE, FINAL_VOTE) and type(body) is tuple and len(body) == 2:
            members, bit = self._set(body[0]), body[1]
            if members is None or bit not in (0, 1):
                self.node.malformed(self.sid, src, kind)
                return
            pending = self.main_pending if kind == MAIN_VOTE else self.final_pending
            if src not in pending and src not in (self.main if kind == MAIN_VOTE else self.final):
                pending[src] = (members, bit)
                self._progress()
        else:
            self.node.malformed(self.sid, src, kind)

    def _validate(self, pending, support, counted):
        moved = False
        for j in list(pending):
            members, bit = pending[j]
            if all(m in support for m in members):
                del pending[j]
                if majority(support[m] for m in members) == bit:
                    counted[j] = bit
                    moved = True
                else:
                    self.node.malformed(self.sid, j, "vote contradicts its own support")
        return moved

    def _progress(self):
        nt = self.n - self.t
        node = self.node
        if self.A is None and len(self.pre) >= nt:
            self.A = tuple(list(self.pre)[:nt])
            a = majority(self.pre[j] for j in self.A)
            node.broadcast(self.sid, MAIN_VOTE, (self.A, node.behavior.ba_vote(self, MAIN_VOTE, a)))
        self._validate(self.main_pending, self.pre, self.main)
        if self.B is None and len(self.main) >= nt:
            self.B = tuple(list(self.main)[:nt])
            b = majority(self.main[j] for j in self.B)
            node.broadcast(self.sid, FINAL_VOTE, (self.B, node.behavior.ba_vote(self, FINAL_VOTE, b)))
        self._validate(self.final_pending, self.main, self.final)
        if self.C is None and self.B is not None and len(self.final) >= nt:
            self.C = tuple(list(self.final)[:nt])
            a_vals = {self.main[j] for j in self.B}
            b_vals = {self.final[j] for j in self.C}
            if len(a_vals) == 1:
                self.grade = (a_vals.pop(), 2)
            elif len(b_vals) == 1:
                self.grade = (b_vals.pop(), 1)
            else:
                self.grade = (None, 0)
            node.sim.record("grade", node.pid, self.sid, list(self.grade))
            self.proc.on_vote(self)


class BaProcess:
    def __init__(self, node, x: int, backend: str, max_rounds: int, u: int | None = None):
        self.node = node
        self.n, self.t = node.n, node.t
        self.sid = SessionId(BA, 1, 0)
        self.x = x
        self.backend = backend
        self.max_rounds = max_rounds
        self.u = u
        self.round = None
        self.decided = None
        self.decide_sent = False
        self.decide_votes: dict[int, set[int]] = {0: set(), 1: set()}
        self.halted = False

    def start(self) -> None:
        node = self.node
        node.start_session(self.sid, self)
        node.sim.record("input", node.pid, self.sid, {"input": self.x})
        self._next_round(1)

    def _next_round(self, r: int) -> None:
        if r > self.max_rounds:
            self.node.sim.record("round-cap", self.node.pid, self.sid, r - 1)
            return
        self.round = Round(self, r)
        self.round.begin(self.x)

    def on_vote(self, rnd: Round) -> None:
        value, grade = rnd.grade
        if grade == 2:
            self._decide(value, rnd.r)
        coin = Coin(self.node, SessionId(COIN, rnd.r, 0, rnd.sid), self, self.backend, self.u)
        coin.round = rnd
        rnd.coin = coin
        coin.begin()

    def on_coin_output(self, coin, bit: int) -> None:
        value, grade = coin.round.grade
        self.x = value if grade >= 1 else bit

    def on_coin_complete(self, coin) -> None:
        rnd = coin.round
        self.node.complete_session(rnd.sid)
        if not self.halted:
            self._next_round(rnd.r + 1)

    def _decide(self, value: int, r: int) -> None:
        if self.decided is None:
            self.decided = value
            self.node.sim.record("decide", self.node.pid, self.sid, {"value": value, "round": r})
        if not self.decide_sent:
            self.decide_sent = True
            self.node.broadcast(self.sid, DECIDE, value)

    def on_message(self, src, kind, body, via_rb) -> None:
        if kind != DECIDE or not via_rb or body not in (0, 1):
            self.node.malformed(self.sid, src, kind)
            return
        votes = self.decide_votes[body]
        votes.add(src)
        if len(votes) >= self.t + 1 and not self.decide_sent:
            self._decide(body, self.round.r if self.round else 0)
        if len(votes) >= self.n - self.t and not self.halted:
            self.halted = True
            node = self.node
            node.output(self.sid, body)
            node.complete_session(self.sid)
            node.halt()
