"""Shunning VSS over a bivariate polynomial, plus an ideal stand-in.

The dealer hands process j the row g_j(y) = f(j, y) and column h_j(x) = f(x, j).
Every unordered pair {k, l} then runs four moderated sub-sessions, one per
(dealer x, entry f(k, l)) with x in {k, l} and the other endpoint moderating:
the dealer shares the entry from its own row or column and the moderator
pins it with its copy. Sub-session ``(x, k, l)`` shares f(k, l) with dealer x.

:class:`IdealSvss` exposes the same interface but is a trusted functionality
inside the simulator. It is used where the real stack is too slow to sample
(see the coin and BA campaigns).
"""

from __future__ import annotations

from .dmm import MW, SessionId
from .field import INCONSISTENT, UNDERDETERMINED, bipoly_col, bipoly_row, interpolate_bipoly, interpolate_unipoly, random_bipoly
from .mwsvss import MwSvss
from .sim import BOT

BIPOLY = "BIPOLY"
G_SETS = "G_SETS"
ISV_DEAL = "ISV_DEAL"
ISV_OPEN = "ISV_OPEN"


def child_counter(x: int, k: int, l: int, n: int) -> int:
    return 1 + ((k - 1) * n + (l - 1)) * 2 + (1 if x == l else 0)


def child_keys(n: int):
    """All (dealer x, k, l) sub-session keys, four per unordered pair."""
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            for x in (a, b):
                yield (x, a, b)
                yield (x, b, a)


def pair_keys(a: int, b: int):
    return ((a, a, b), (a, b, a), (b, a, b), (b, b, a))


class Svss:
    def __init__(self, node, session: SessionId, parent):
        self.node = node
        self.sid = session
        self.dealer = session.dealer
        self.parent = parent
        self.me = node.pid
        self.n, self.t, self.p = node.n, node.t, node.p
        self.children: dict[tuple, MwSvss] = {}
        for key in child_keys(self.n):
            x, k, l = key
            mod = l if x == k else k
            sid = SessionId(MW, child_counter(x, k, l, self.n), x, session)
            child = MwSvss(node, sid, mod, self)
            child.key = key
            self.children[key] = child
        self.g = self.h = None
        # dealer bookkeeping
        self.pair_done: dict[frozenset, int] = {}
        self.G_of: dict[int, list[int]] = {}
        self.G: list[int] = []
        self.G_sent = False
        # participant
        self.Ghat = None
        self.Ghat_of: dict[int, frozenset] = {}
        self.needed: set[frozenset] = set()
        self.child_done: set[tuple] = set()
        self.share_done = False
        # reconstruct
        self.recon_on = False
        self.r: dict[tuple, object] = {}
        self.result = None

    def begin(self) -> None:
        self.node.start_session(self.sid, self)
        for child in self.children.values():
            self.node.start_session(child.sid, child)

    # ---- share -----------------------------------------------------------
    def deal(self, secret: int) -> None:
        node = self.node
        node.sim.record("input", self.me, self.sid, {"role": "dealer", "secret": secret})
        f = random_bipoly(secret, self.t, self.p, node.rng)
        pts = range(1, self.t + 2)
        shares = {}
        for j in range(1, self.n + 1):
            g, h = bipoly_row(f, j, self.n), bipoly_col(f, j, self.n)
            shares[j] = (tuple(g(y) for y in pts), tuple(h(x) for x in pts))
        shares = node.behavior.svss_deal(self, shares)
        for j, share in shares.items():
            node.send(j, self.sid, BIPOLY, share)

    def on_message(self, src, kind, body, via_rb):
        if kind == BIPOLY and not via_rb:
            self._on_bipoly(src, body)
        elif kind == G_SETS and via_rb:
            self._on_gsets(src, body)
        else:
            self.node.malformed(self.sid, src, f"{kind} on wrong channel")

    def _on_bipoly(self, src, body):
        t, p = self.t, self.p
        ok = (
            src == self.dealer and self.g is None and type(body) is tuple and len(body) == 2
            and all(type(v) is tuple and len(v) == t + 1 and all(type(e) is int and 0 <= e < p for e in v) for v in body)
        )
        if not ok:
            self.node.malformed(self.sid, src, BIPOLY)
            return
        self.g = interpolate_unipoly(enumerate(body[0], 1), t, p)
        self.h = interpolate_unipoly(enumerate(body[1], 1), t, p)
        self.node.sim.record("poly", self.me, self.sid, {"g": list(self.g.coeffs), "h": list(self.h.coeffs)})
        me, g, h = self.me, self.g, self.h
        behavior = self.node.behavior
        ch = self.children
        for l in range(1, self.n + 1):
            if l == me:
                continue
            # dealer of f(me, l) and f(l, me); moderator of the same entries dealt by l
            ch[(me, me, l)].deal(behavior.svss_child_secret(self, (me, me, l), g(l)))
            ch[(me, l, me)].deal(behavior.svss_child_secret(self, (me, l, me), h(l)))
            ch[(l, l, me)].moderate(h(l))
            ch[(l, me, l)].moderate(g(l))

    def on_child_share_complete(self, child):
        key = child.key
        self.child_done.add(key)
        if self.me == self.dealer:
            pair = frozenset(key[1:])
            cnt = self.pair_done[pair] = self.pair_done.get(pair, 0) + 1
            if cnt == 4:
                a, b = sorted(pair)
                self._link(a, b)
                self._link(b, a)
        self._try_complete()

    def _link(self, a, b):
        # a pair with itself has no sub-sessions, so it is vacuously complete
        lst = self.G_of.setdefault(a, [a])
        lst.append(b)
        if len(lst) >= self.n - self.t and a not in self.G and not self.G_sent:
            self.G.append(a)
            if len(self.G) >= self.n - self.t:
                self.G_sent = True
                G = tuple(sorted(self.G))
                value = (G, tuple(tuple(sorted(self.G_of[j])) for j in G))
                self.node.broadcast(self.sid, G_SETS, value)

    def _on_gsets(self, src, body):
        n, t = self.n, self.t
        parsed = None
        if src == self.dealer and self.Ghat is None and type(body) is tuple and len(body) == 2:
            G, rows = body
            if (type(G) is tuple and type(rows) is tuple and len(G) == len(rows) and len(set(G)) == len(G) >= n - t
                    and all(type(j) is int and 1 <= j <= n for j in G)):
                parsed = {}
                for j, row in zip(G, rows):
                    if (type(row) is not tuple or len(set(row)) != len(row) or len(row) < n - t
                            or not all(type(l) is int and 1 <= l <= n for l in row)):
                        parsed = None
                        break
                    parsed[j] = frozenset(row)
        if parsed is None:
            self.node.malformed(self.sid, src, G_SETS)
            return
        self.Ghat = tuple(sorted(parsed))
        self.Ghat_of = parsed
        self.needed = {frozenset((k, l)) for k in self.Ghat for l in parsed[k] if l != k}
        self._try_complete()

    def _try_complete(self):
        if self.share_done or self.Ghat is None:
            return
        done = self.child_done
        for pair in self.needed:
            a, b = tuple(pair)
            if not all(key in done for key in pair_keys(a, b)):
                return
        self.share_done = True
        self.node.sim.record(
            "share-complete", self.me, self.sid,
            {"G": list(self.Ghat), "Gs": {k: sorted(self.Ghat_of[k]) for k in self.Ghat}},
        )
        self.parent.on_svss_share_complete(self)
        if self.recon_on:
            self._reconstruct_children()

    # ---- reconstruct -------------------------------------------------------
    def reconstruct(self) -> None:
        if self.recon_on:
            return
        self.recon_on = True
        self.node.sim.record("recon-start", self.me, self.sid, None)
        if self.share_done:
            self._reconstruct_children()

    def _reconstruct_children(self):
        for pair in sorted(tuple(sorted(p)) for p in self.needed):
            for key in pair_keys(*pair):
                self.children[key].reconstruct()

    def on_child_output(self, child, value):
        self.r[child.key] = value
        if self.result is None and self.recon_on and self.share_done:
            for pair in self.needed:
                a, b = tuple(pair)
                if not all(key in self.r for key in pair_keys(a, b)):
                    return
            self._output()

    def _output(self):
        self.result = reconstruct_value(self.Ghat, self.Ghat_of, self.r, self.t, self.p)
        self.node.output(self.sid, self.result)
        self.node.complete_session(self.sid)
        self.parent.on_svss_output(self, self.result)


def reconstruct_value(G, G_of, r, t, p):
    """Output rule of the reconstruct phase given sub-session results ``r``."""
    excluded = set()
    rows, cols = {}, {}
    for k in G:
        others = sorted(l for l in G_of[k] if l != k)
        gvals = [(l, r[(k, k, l)]) for l in others]
        hvals = [(l, r[(k, l, k)]) for l in others]
        if any(v is BOT for _, v in gvals) or any(v is BOT for _, v in hvals):
            excluded.add(k)
            continue
        g = interpolate_unipoly(gvals, t, p)
        h = interpolate_unipoly(hvals, t, p)
        if g is INCONSISTENT or h is INCONSISTENT:
            excluded.add(k)
            continue
        rows[k], cols[k] = g, h
    good = [k for k in G if k not in excluded]
    for k in good:
        for l in good:
            if cols[k](l) != rows[l](k):
                return BOT
    fit = interpolate_bipoly([(k, l, rows[k](l)) for k in good for l in good], t, p)
    if fit is INCONSISTENT or fit is UNDERDETERMINED:
        return BOT
    return fit(0, 0)


class IdealSvss:
    """Trusted sharing: the secret lives in ``sim.functionality``."""

    def __init__(self, node, session: SessionId, parent):
        self.node = node
        self.sid = session
        self.dealer = session.dealer
        self.parent = parent
        self.me = node.pid
        self.n, self.t = node.n, node.t
        self.share_done = False
        self.recon_on = False
        self.opens: set[int] = set()
        self.result = None

    def begin(self) -> None:
        self.node.start_session(self.sid, self)

    def deal(self, secret: int) -> None:
        node = self.node
        node.sim.record("input", self.me, self.sid, {"role": "dealer", "secret": secret})
        node.sim.functionality.setdefault(self.sid, secret % node.p)
        node.broadcast(self.sid, ISV_DEAL, ())

    def on_message(self, src, kind, body, via_rb):
        if kind == ISV_DEAL and via_rb and src == self.dealer:
            if not self.share_done:
                self.share_done = True
                self.node.sim.record("share-complete", self.me, self.sid, None)
                self.parent.on_svss_share_complete(self)
                self._try_output()
        elif kind == ISV_OPEN and not via_rb:
            self.opens.add(src)
            self._try_output()
        else:
            self.node.malformed(self.sid, src, f"{kind} on wrong channel")

    def reconstruct(self) -> None:
        if self.recon_on:
            return
        self.recon_on = True
        self.node.sim.record("recon-start", self.me, self.sid, None)
        if self.node.behavior.ideal_open(self):
            self.node.send_all(self.sid, ISV_OPEN, ())
        self._try_output()

    def _try_output(self):
        if self.result is None and self.recon_on and self.share_done and len(self.opens) >= self.n - self.t:
            self.result = self.node.sim.functionality[self.sid]
            self.node.output(self.sid, self.result)
            self.node.complete_session(self.sid)
            self.parent.on_svss_output(self, self.result)
