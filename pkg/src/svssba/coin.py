"""Shunning common coin from n^2 shunning VSS instances.

Process i deals one secret per party j, uniform in [0, u). Party j's attach set
is the first n - t dealers whose secret for j finished sharing at j. A process
accepts j once it saw j's attach set and finished sharing every secret in it.
With n - t accepted parties it declares that set; once n - t declarations are
subsets of its own accepted set it fixes ``H`` and starts reconstructing. Each
party's value is the sum of its attached secrets mod u; the coin is 0 if some
party in ``H`` has value 0, else 1.

Why both outcomes keep probability >= 1/4: every attach set contains at least
n - 2t >= 1 honest dealer, so each party's sum is uniform and unknown to the
adversary until some honest process starts reconstructing, which happens only
after that process fixed ``H``. All processes output 1 when every party that
is ever accepted has a nonzero sum, with probability at least (1 - 1/u)^n.
Parties contained in every ``H`` form a core fixed before any sum is revealed,
and a zero inside the core makes every process output 0. With u = n and a core
of c parties the two bounds are (1 - 1/n)^n and 1 - (1 - 1/n)^c.
"""

from __future__ import annotations

from .dmm import SVSS, SessionId
from .sim import BOT
from .svss import IdealSvss, Svss

ATTACHED = "COIN_ATTACHED"
DECLARE = "COIN_DECLARE"


class Coin:
    def __init__(self, node, session: SessionId, parent, backend: str = "real", u: int | None = None):
        self.node = node
        self.sid = session
        self.parent = parent
        self.me = node.pid
        self.n, self.t = node.n, node.t
        self.u = u or self.n
        cls = Svss if backend == "real" else IdealSvss
        self.children = {}
        for k in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                child = cls(node, SessionId(SVSS, j, k, session), self)
                child.coin_key = (k, j)
                self.children[(k, j)] = child
        self.shared: set[tuple[int, int]] = set()
        self.attach: list[int] = []
        self.attach_sent = False
        self.attach_of: dict[int, tuple[int, ...]] = {}
        self.accepted: list[int] = []
        self.declared = False
        self.declarations: dict[int, frozenset] = {}
        self.H: tuple[int, ...] | None = None
        self.started: set[tuple[int, int]] = set()
        self.values: dict[tuple[int, int], object] = {}
        self.sums: dict[int, int] = {}
        self.result = None
        self.completed = False

    def begin(self) -> None:
        node = self.node
        node.start_session(self.sid, self)
        for child in self.children.values():
            child.begin()
        for j in range(1, self.n + 1):
            secret = node.behavior.coin_secret(self, j, node.rng.randrange(self.u))
            if secret is not None:
                self.children[(self.me, j)].deal(secret)

    # ---- sharing phase -----------------------------------------------------
    def on_svss_share_complete(self, child) -> None:
        k, j = child.coin_key
        self.shared.add((k, j))
        if j == self.me and not self.attach_sent:
            self.attach.append(k)
            if len(self.attach) == self.n - self.t:
                self.attach_sent = True
                self.node.broadcast(self.sid, ATTACHED, tuple(sorted(self.attach)))
        self._try_accept(j)

    def on_message(self, src, kind, body, via_rb) -> None:
        members = self._members(body) if via_rb else None
        if kind == ATTACHED and members is not None and len(members) == self.n - self.t:
            if src not in self.attach_of:
                self.attach_of[src] = tuple(sorted(members))
                self._try_accept(src)
        elif kind == DECLARE and members is not None:
            if src not in self.declarations:
                self.declarations[src] = members
                self._try_fix()
        else:
            self.node.malformed(self.sid, src, kind)

    def _members(self, body):
        n = self.n
        if type(body) is not tuple or len(set(body)) != len(body) or len(body) < n - self.t:
            return None
        if not all(type(v) is int and 1 <= v <= n for v in body):
            return None
        return frozenset(body)

    def _try_accept(self, x: int) -> None:
        if x in self.accepted or x not in self.attach_of:
            return
        if not all((k, x) in self.shared for k in self.attach_of[x]):
            return
        self.accepted.append(x)
        if self.H is not None:
            self._open(x)
        if len(self.accepted) >= self.n - self.t and not self.declared:
            self.declared = True
            self.node.broadcast(self.sid, DECLARE, tuple(sorted(self.accepted)))
        self._try_fix()

    def _try_fix(self) -> None:
        if self.H is not None or len(self.accepted) < self.n - self.t:
            return
        acc = set(self.accepted)
        if sum(1 for s in self.declarations.values() if s <= acc) < self.n - self.t:
            return
        self.H = tuple(sorted(acc))
        self.node.sim.record("coin-fix", self.me, self.sid, list(self.H))
        for x in list(self.accepted):
            self._open(x)

    # ---- reconstruct phase -------------------------------------------------
    def _open(self, x: int) -> None:
        for k in self.attach_of[x]:
            if (k, x) not in self.started:
                self.started.add((k, x))
                self.children[(k, x)].reconstruct()

    def on_svss_output(self, child, value) -> None:
        k, x = child.coin_key
        self.values[(k, x)] = value
        if x not in self.sums and all((d, x) in self.values for d in self.attach_of.get(x, ())):
            total = sum(0 if self.values[(d, x)] is BOT else self.values[(d, x)] for d in self.attach_of[x])
            self.sums[x] = total % self.u
            self.node.sim.record("coin-sum", self.me, self.sid, [x, self.sums[x]])
        if self.result is None and self.H is not None and all(x in self.sums for x in self.H):
            self.result = 0 if any(self.sums[x] == 0 for x in self.H) else 1
            self.node.output(self.sid, self.result)
            self.parent.on_coin_output(self, self.result)
        self._try_complete()

    def _try_complete(self) -> None:
        if self.completed or self.result is None:
            return
        if all(key in self.values for key in self.started):
            self.completed = True
            self.node.complete_session(self.sid)
            self.parent.on_coin_complete(self)
