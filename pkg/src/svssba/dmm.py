"""Detection and message management.

Each process keeps a set ``D`` of processes it has caught lying, two tables of
broadcasts it still expects (``ack`` at dealers, ``deal`` at monitors) and the
start/completion indices that define its local session order. Every inbound
protocol message is classified as discard, delay or forward.
"""

from __future__ import annotations

import enum
from collections import deque

# Session kinds. Plain ints keep SessionId hashing independent of PYTHONHASHSEED.
MW, SVSS, COIN, ROUND, BA, BCAST = 1, 2, 3, 4, 5, 6
KIND_NAMES = {MW: "mw", SVSS: "svss", COIN: "coin", ROUND: "round", BA: "ba", BCAST: "rb"}


class SessionId:
    """A protocol instance: counter ``c`` and ``dealer``, scoped under ``parent``."""

    __slots__ = ("kind", "c", "dealer", "parent", "key", "_hash", "depth")
    _interned: dict = {}

    def __new__(cls, kind: int, c: int, dealer: int, parent: SessionId | None = None):
        key = (kind, c, dealer) + (parent.key if parent is not None else ())
        self = cls._interned.get(key)
        if self is not None:
            return self
        if c < 1:
            raise ValueError("session counter must be >= 1")
        self = super().__new__(cls)
        self.kind = kind
        self.c = c
        self.dealer = dealer
        self.parent = parent
        self.key = key
        self._hash = hash(key)
        self.depth = 0 if parent is None else parent.depth + 1
        if len(cls._interned) > 2_000_000:
            cls._interned.clear()
        cls._interned[key] = self
        return self

    def __reduce__(self):
        return (SessionId, (self.kind, self.c, self.dealer, self.parent))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, SessionId) and self.key == other.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"SessionId({self.path})"

    @property
    def path(self) -> str:
        own = f"{KIND_NAMES.get(self.kind, self.kind)}:{self.c}.{self.dealer}"
        return own if self.parent is None else f"{self.parent.path}/{own}"

    def with_dealer(self, dealer: int) -> SessionId:
        return SessionId(self.kind, self.c, dealer, self.parent)

    def within(self, root: SessionId) -> bool:
        s = self
        while s is not None:
            if s == root:
                return True
            s = s.parent
        return False

    def lineage(self):
        s = self
        while s is not None:
            yield s
            s = s.parent


class Verdict(enum.Enum):
    DISCARD = "discard"
    DELAY = "delay"
    FORWARD = "forward"


DISCARD, DELAY, FORWARD = Verdict.DISCARD, Verdict.DELAY, Verdict.FORWARD


class DmmState:
    """Per-process filter state.

    ``ack`` maps (j, l, session) -> x: the dealer of ``session`` expects j to
    broadcast x as its value for l. ``deal`` maps (j, session) -> x: this
    process (as l) expects j to broadcast x as its value for l.
    """

    def __init__(self, pid: int, deal_key: str = "tuple-session", discard: str = "ordered"):
        if deal_key not in ("tuple-session", "literal"):
            raise ValueError(f"unknown deal_key {deal_key!r}")
        if discard not in ("ordered", "immediate"):
            raise ValueError(f"unknown discard rule {discard!r}")
        self.pid = pid
        self.deal_key = deal_key
        self.discard = discard
        self.D: set[int] = set()
        # j -> session of the broadcast that exposed j
        self.exposed_in: dict[int, SessionId] = {}
        self.ack: dict[tuple, int] = {}
        self.deal: dict[tuple, int] = {}
        self.started: dict[SessionId, int] = {}
        self.completed: dict[SessionId, int] = {}
        self.delayed: dict[int, deque] = {}
        self._clock = 0
        # j -> {blocking session: outstanding tuple count}
        self._outstanding: dict[int, dict[SessionId, int]] = {}
        # j -> {blocking session: completion index}, only completed sessions
        self._blocking: dict[int, dict[SessionId, int]] = {}
        # blocking session -> set of j with outstanding tuples keyed on it
        self._by_session: dict[SessionId, set[int]] = {}
        # RECON broadcasts already seen: (j, session, l) -> x
        self._seen: dict[tuple, int] = {}
        # session -> senders with a deal tuple recorded in it
        self._deals_of: dict[SessionId, list[int]] = {}

    # ---- session order -------------------------------------------------
    def start(self, session: SessionId) -> int:
        self._clock += 1
        self.started[session] = self._clock
        return self._clock

    def complete(self, session: SessionId) -> int:
        self._clock += 1
        idx = self.completed[session] = self._clock
        for j in self._by_session.get(session, ()):
            self._blocking.setdefault(j, {})[session] = idx
        return idx

    def precedes(self, a: SessionId, b: SessionId) -> bool:
        ca = self.completed.get(a)
        sb = self.started.get(b)
        return ca is not None and sb is not None and ca < sb

    # ---- filter --------------------------------------------------------
    def filter(self, j: int, session: SessionId) -> Verdict:
        """Discard, delay or forward a message of ``session`` sent by j.

        With the ``ordered`` discard rule a process in D is discarded only in
        sessions started after the session that exposed it completed; in
        sessions running concurrently with that one it is treated like any
        other sender. ``immediate`` discards every message from D.
        """
        if j not in self.D and not self._blocking.get(j):
            return FORWARD
        st = self.started[session]
        if j in self.D:
            if self.discard == "immediate":
                return DISCARD
            ci = self.completed.get(self.exposed_in[j])
            if ci is not None and ci < st:
                return DISCARD
        blocking = self._blocking.get(j)
        if blocking:
            for ci in blocking.values():
                if ci < st:
                    return DELAY
        return FORWARD

    def hold(self, j: int, item) -> None:
        self.delayed.setdefault(j, deque()).append(item)

    def take_delayed(self, j: int) -> list:
        q = self.delayed.pop(j, None)
        return list(q) if q else []

    # ---- tuples --------------------------------------------------------
    def _key_session(self, j: int, session: SessionId, which: str) -> SessionId:
        if which == "deal" and self.deal_key == "literal":
            return session.with_dealer(j)
        return session

    def _inc(self, j: int, ks: SessionId) -> None:
        per = self._outstanding.setdefault(j, {})
        per[ks] = per.get(ks, 0) + 1
        self._by_session.setdefault(ks, set()).add(j)
        ci = self.completed.get(ks)
        if ci is not None:
            self._blocking.setdefault(j, {})[ks] = ci

    def _dec(self, j: int, ks: SessionId) -> bool:
        """Returns True if j stopped being blocked on ``ks``."""
        per = self._outstanding[j]
        per[ks] -= 1
        if per[ks]:
            return False
        del per[ks]
        self._by_session[ks].discard(j)
        blk = self._blocking.get(j)
        if blk is not None and ks in blk:
            del blk[ks]
            return True
        return False

    def record_ack(self, j: int, l: int, session: SessionId, x: int) -> list:
        """Dealer expects j to broadcast x for l. Returns resolution events."""
        key = (j, l, session)
        if key in self.ack:
            return []
        self.ack[key] = x
        self._inc(j, self._key_session(j, session, "ack"))
        seen = self._seen.get((j, session, l))
        if seen is not None:
            return self.on_expected_broadcast(j, session, l, seen)
        return []

    def record_deal(self, j: int, session: SessionId, x: int) -> list:
        """This process (as l) expects j to broadcast x for it."""
        key = (j, session)
        if key in self.deal:
            return []
        self.deal[key] = x
        self._deals_of.setdefault(session, []).append(j)
        self._inc(j, self._key_session(j, session, "deal"))
        seen = self._seen.get((j, session, self.pid))
        if seen is not None:
            return self.on_expected_broadcast(j, session, self.pid, seen)
        return []

    def drop_session_deals(self, session: SessionId) -> list:
        events = []
        for key in [(j, session) for j in self._deals_of.get(session, ()) if (j, session) in self.deal]:
            del self.deal[key]
            unblocked = self._dec(key[0], self._key_session(key[0], session, "deal"))
            events.append(("tuple-remove", key[0], ("deal", key[0], session)))
            if unblocked:
                events.append(("unblock", key[0], None))
        return events

    def on_expected_broadcast(self, j: int, session: SessionId, l: int, x: int) -> list:
        """j broadcast value x for l in ``session``.

        Returns events: ("tuple-remove", j, tuple), ("unblock", j, None),
        ("shun-add", j, tuple).
        """
        self._seen.setdefault((j, session, l), x)
        events = []
        if session.dealer == self.pid:
            key = (j, l, session)
            want = self.ack.get(key)
            if want is not None:
                events.extend(self._resolve(j, want, x, ("ack", j, l, session), self.ack, key, "ack"))
        if l == self.pid:
            key = (j, session)
            want = self.deal.get(key)
            if want is not None:
                events.extend(self._resolve(j, want, x, ("deal", j, session), self.deal, key, "deal"))
        return events

    def _resolve(self, j, want, got, tup, table, key, which) -> list:
        if want == got:
            del table[key]
            events = [("tuple-remove", j, tup)]
            if self._dec(j, self._key_session(j, key[-1], which)):
                events.append(("unblock", j, None))
            return events
        if j in self.D:
            return []
        self.D.add(j)
        self.exposed_in[j] = self._key_session(j, key[-1], which)
        return [("shun-add", j, tup)]

    def outstanding(self, j: int) -> dict[SessionId, int]:
        return dict(self._outstanding.get(j, {}))
