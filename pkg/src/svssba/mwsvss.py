"""Moderated weak shunning VSS: one share/reconstruct state machine per session.

Every process runs one :class:`MwSvss` per session regardless of role; the
dealer and moderator branches switch on ``node.pid``. The instance reports to
``parent`` through ``on_child_share_complete(inst)`` and
``on_child_output(inst, value)``.
"""

from __future__ import annotations

from .field import INCONSISTENT, interpolate_unipoly, random_unipoly, value_at_zero
from .node import RECON
from .sim import BOT

ROW_VALUES = "ROW_VALUES"
ROW_POLY = "ROW_POLY"
F_POLY = "F_POLY"
RELAY = "RELAY"
ACK = "ACK"
L_SET = "L_SET"
F0 = "F0"
M_SET = "M_SET"
OK = "OK"

_P2P = {ROW_VALUES, ROW_POLY, F_POLY, RELAY, F0}
_RB = {ACK, L_SET, M_SET, OK, RECON}


def dealer_polynomials(secret: int, n: int, t: int, p: int, rng):
    """f with f(0)=secret and f_1..f_n with f_l(0)=f(l)."""
    f = random_unipoly(secret, t, p, rng)
    fl = [None] + [random_unipoly(f(l), t, p, rng) for l in range(1, n + 1)]
    return f, fl


def dealer_messages(f, fl, n: int, t: int):
    """Payloads of the dealer's first step, keyed by recipient."""
    rows = {j: tuple(fl[l](j) for l in range(1, n + 1)) for j in range(1, n + 1)}
    polys = {l: tuple(fl[l](x) for x in range(1, t + 2)) for l in range(1, n + 1)}
    fpoly = tuple(f(x) for x in range(1, t + 2))
    return rows, polys, fpoly


class MwSvss:
    def __init__(self, node, session, moderator: int, parent):
        self.node = node
        self.sid = session
        self.dealer = session.dealer
        self.mod = moderator
        self.parent = parent
        self.me = node.pid
        self.n, self.t, self.p = node.n, node.t, node.p
        # participant
        self.row = None
        self.poly = None
        self.relayed = False
        self.relays: dict[int, int] = {}
        self.acks: set[int] = set()
        self.L: list[int] = []
        self.L_sent = False
        self.Lhat: dict[int, frozenset] = {}
        self.Mhat: tuple[int, ...] | None = None
        self.ok = False
        self.covered = False
        self.share_done = False
        # moderator
        self.s_mod = None
        self.fpoly = None
        self.f0: dict[int, int] = {}
        self.M: list[int] = []
        self.M_sent = False
        # dealer
        self.fl = None
        self.ok_sent = False
        # reconstruct
        self.recon_on = False
        self.raw: dict[int, dict[int, int]] = {}
        self.fbar0: dict[int, int] = {}
        self.result = None

    # ---- roles -----------------------------------------------------------
    def deal(self, secret: int) -> None:
        node = self.node
        node.sim.record("input", self.me, self.sid, {"role": "dealer", "secret": secret})
        f, fl = dealer_polynomials(secret, self.n, self.t, self.p, node.rng)
        self.fl = fl
        rows, polys, fpoly = dealer_messages(f, fl, self.n, self.t)
        rows, polys, fpoly = node.behavior.mw_deal(self, rows, polys, fpoly)
        for j in range(1, self.n + 1):
            if j in rows:
                node.send(j, self.sid, ROW_VALUES, rows[j])
            if j in polys:
                node.send(j, self.sid, ROW_POLY, polys[j])
        if fpoly is not None:
            node.send(self.mod, self.sid, F_POLY, fpoly)

    def moderate(self, value: int) -> None:
        self.node.sim.record("input", self.me, self.sid, {"role": "moderator", "value": value})
        self.s_mod = self.node.behavior.mw_moderator_value(self, value)
        self._try_admit_all()

    # ---- dispatch --------------------------------------------------------
    def on_message(self, src: int, kind: str, body, via_rb: bool) -> None:
        handler = (_RB_HANDLERS if via_rb else _P2P_HANDLERS).get(kind)
        if handler is None:
            self.node.malformed(self.sid, src, f"{kind} on wrong channel")
            return
        handler(self, src, body)

    def _vector(self, body, length: int) -> bool:
        p = self.p
        return type(body) is tuple and len(body) == length and all(type(v) is int and 0 <= v < p for v in body)

    def _members(self, body) -> frozenset | None:
        if type(body) is not tuple or len(body) < self.n - self.t:
            return None
        members = frozenset(body)
        if len(members) != len(body) or not members <= self.node.ids:
            return None
        return members

    # ---- share: participant ---------------------------------------------
    def _on_ROW_VALUES(self, src, body):
        if src != self.dealer or self.row is not None or not self._vector(body, self.n):
            self.node.malformed(self.sid, src, ROW_VALUES)
            return
        self.row = body
        self._try_relay()

    def _on_ROW_POLY(self, src, body):
        if src != self.dealer or self.poly is not None or not self._vector(body, self.t + 1):
            self.node.malformed(self.sid, src, ROW_POLY)
            return
        self.poly = interpolate_unipoly(enumerate(body, 1), self.t, self.p)
        self.node.sim.record("poly", self.me, self.sid, {"f0": self.poly(0)})
        self._try_relay()
        for l in list(self.relays):
            self._try_confirm(l)

    def _try_relay(self):
        if self.relayed or self.row is None or self.poly is None:
            return
        self.relayed = True
        node = self.node
        for l in range(1, self.n + 1):
            node.send(l, self.sid, RELAY, self.row[l - 1])
        node.broadcast(self.sid, ACK, ())

    def _on_RELAY(self, src, body):
        if src in self.relays or type(body) is not int or not 0 <= body < self.p:
            self.node.malformed(self.sid, src, RELAY)
            return
        self.relays[src] = body
        self._try_confirm(src)

    def _on_ACK(self, src, body):
        if src in self.acks:
            return
        self.acks.add(src)
        self._try_confirm(src)
        if self.me == self.mod:
            for j, members in list(self.Lhat.items()):
                if src in members:
                    self._try_admit(j)
        self._try_cover()

    def _try_confirm(self, l):
        # step 3: private relay, public ack, dealer's polynomial, and agreement
        if self.L_sent or self.poly is None or l not in self.acks or l not in self.relays:
            return
        if self.Mhat is not None and self.me not in self.Mhat:
            return
        if l in self.L:
            return
        expected = self.poly(l)
        if self.relays[l] != expected:
            return
        self.node.record_deal(l, self.sid, expected)
        self.L.append(l)
        if len(self.L) >= self.n - self.t:
            self.L_sent = True
            self.node.broadcast(self.sid, L_SET, tuple(sorted(self.L)))
            self.node.send(self.mod, self.sid, F0, self.poly(0))

    def _on_L_SET(self, src, body):
        members = self._members(body)
        if members is None or src in self.Lhat:
            self.node.malformed(self.sid, src, L_SET)
            return
        self.Lhat[src] = members
        if self.me == self.mod:
            self._try_admit(src)
        self._try_cover()

    def _on_M_SET(self, src, body):
        members = self._members(body)
        if src != self.mod or members is None or self.Mhat is not None:
            self.node.malformed(self.sid, src, M_SET)
            return
        self.Mhat = tuple(sorted(members))
        if self.me not in members:
            self.node.drop_session_deals(self.sid)
        self._try_cover()

    def _on_OK(self, src, body):
        if src != self.dealer or self.ok:
            return
        self.ok = True
        self._try_complete()

    def _try_cover(self):
        """M-hat, every L-hat of M-hat, and an ack from every member of those."""
        if self.covered or self.Mhat is None:
            return
        Lhat, acks = self.Lhat, self.acks
        for l in self.Mhat:
            members = Lhat.get(l)
            if members is None or not members <= acks:
                return
        self.covered = True
        if self.me == self.dealer and not self.ok_sent and self.fl is not None:
            self.ok_sent = True
            behavior = self.node.behavior
            for j in self.Mhat:
                for l in sorted(Lhat[j]):
                    self.node.record_ack(l, j, self.sid, self.fl[j](l))
            if behavior.mw_send_ok(self):
                self.node.broadcast(self.sid, OK, ())
        self._try_complete()

    def _try_complete(self):
        if self.share_done or not (self.ok and self.covered):
            return
        self.share_done = True
        self.node.sim.record(
            "share-complete", self.me, self.sid,
            {"M": list(self.Mhat), "L": {l: sorted(self.Lhat[l]) for l in self.Mhat}, "mod": self.mod},
        )
        self.parent.on_child_share_complete(self)
        if self.recon_on:
            self._broadcast_values()
            self._try_output()

    # ---- share: moderator -----------------------------------------------
    def _on_F_POLY(self, src, body):
        if src != self.dealer or self.me != self.mod or self.fpoly is not None or not self._vector(body, self.t + 1):
            self.node.malformed(self.sid, src, F_POLY)
            return
        self.fpoly = interpolate_unipoly(enumerate(body, 1), self.t, self.p)
        self._try_admit_all()

    def _on_F0(self, src, body):
        if self.me != self.mod or src in self.f0 or type(body) is not int or not 0 <= body < self.p:
            self.node.malformed(self.sid, src, F0)
            return
        self.f0[src] = body
        self._try_admit(src)

    def _try_admit_all(self):
        for j in list(self.Lhat):
            self._try_admit(j)

    def _try_admit(self, j):
        if self.M_sent or j in self.M or self.s_mod is None or self.fpoly is None:
            return
        if j not in self.f0 or j not in self.Lhat:
            return
        honest = (
            self.Lhat[j] <= self.acks
            and self.f0[j] == self.fpoly(j)
            and self.fpoly(0) == self.s_mod
        )
        if not self.node.behavior.mw_admit(self, j, honest):
            return
        self.M.append(j)
        if len(self.M) >= self.n - self.t:
            self.M_sent = True
            self.node.broadcast(self.sid, M_SET, tuple(sorted(self.M)))

    # ---- reconstruct ------------------------------------------------------
    def reconstruct(self) -> None:
        """Invoke reconstruction; only meaningful once the share completed here."""
        if self.recon_on:
            return
        self.recon_on = True
        self.node.sim.record("recon-start", self.me, self.sid, None)
        if self.share_done:
            self._broadcast_values()
            self._try_output()

    def _broadcast_values(self):
        node = self.node
        behavior = node.behavior
        for l in self.Mhat:
            if self.me in self.Lhat[l]:
                value = behavior.mw_recon_value(self, l, self.row[l - 1])
                if value is not None:
                    node.broadcast(self.sid, RECON, (l, value), extra=l)

    def _on_RECON(self, src, body):
        l, value = body
        per = self.raw.setdefault(l, {})
        if src not in per:
            per[src] = value
            if self.recon_on and self.share_done and l not in self.fbar0 and src in self.Lhat.get(l, ()):
                # only a point that completes l's t+1 can unblock the output
                if sum(1 for k in per if k in self.Lhat[l]) == self.t + 1:
                    self._try_output()

    def _try_output(self):
        if self.result is not None or not (self.recon_on and self.share_done):
            return
        t, p = self.t, self.p
        for l in self.Mhat:
            if l in self.fbar0:
                continue
            members = self.Lhat[l]
            points = []
            for k, v in self.raw.get(l, {}).items():
                if k in members:
                    points.append((k, v))
                    if len(points) == t + 1:
                        break
            if len(points) < t + 1:
                return
            self.fbar0[l] = value_at_zero(points, p)
        fit = interpolate_unipoly(((l, self.fbar0[l]) for l in self.Mhat), t, p)
        self.result = BOT if fit is INCONSISTENT else fit(0)
        self.node.output(self.sid, self.result)
        self.node.complete_session(self.sid)
        self.parent.on_child_output(self, self.result)


_RB_HANDLERS = {k: getattr(MwSvss, "_on_" + k) for k in _RB}
_P2P_HANDLERS = {k: getattr(MwSvss, "_on_" + k) for k in _P2P}
