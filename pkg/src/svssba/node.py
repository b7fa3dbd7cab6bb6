"""Per-process runtime: transport, reliable broadcast endpoint, DMM and sessions.

Protocol instances register under a SessionId and receive
``on_message(src, kind, body, via_rb)`` for every message the DMM forwards.
Point-to-point payloads are ``("P", session, kind, body)``; reliable
broadcasts are keyed by ``(origin, session, kind, extra)``.
"""

from __future__ import annotations

from .broadcast import Accept, RbState, Recv, Start, rb_handle
from .dmm import DELAY, FORWARD, DmmState

RECON = "RECON"
# broadcasts that only announce acknowledgements or membership sets
CONTROL_KINDS = frozenset({"ACK", "L_SET", "M_SET", "OK", "G_SETS"})


class Node:
    def __init__(self, sim, pid: int, behavior):
        self.sim = sim
        self.pid = pid
        self.n, self.t, self.p = sim.n, sim.t, sim.p
        self.ids = frozenset(range(1, self.n + 1))
        self.faulty = pid in sim.faulty
        self.behavior = behavior
        self.rng = sim.rng_for(f"proc{pid}")
        self.dmm = DmmState(pid, sim.cfg.deal_key, sim.cfg.discard_rule)
        self.observe_control = sim.cfg.control_filter == "observe"
        self.instances: dict = {}
        self.prestart: dict = {}
        self.rb: dict = {}
        self.halted = False
        self.done = False
        self.app = None

    # ---- outbound --------------------------------------------------------
    def send(self, dst: int, session, kind: str, body) -> None:
        self.sim.transmit(self.pid, dst, ("P", session, kind, body))

    def send_all(self, session, kind: str, body) -> None:
        transmit = self.sim.transmit
        payload = ("P", session, kind, body)
        for dst in range(1, self.n + 1):
            transmit(self.pid, dst, payload)

    def broadcast(self, session, kind: str, value, extra=None) -> None:
        self.sim.rb_broadcast(self, (self.pid, session, kind, extra), value)

    def bracha_start(self, key, value) -> None:
        state = self.rb.get(key)
        if state is None:
            state = self.rb[key] = RbState.create(self.n, self.t, key[0], self.pid)
        self._rb_actions(key, rb_handle(state, Start(value)))

    def _rb_actions(self, key, actions) -> None:
        for act in actions:
            if isinstance(act, Accept):
                self.rb_accept(key, act.value)
            else:
                for dst, value in self.behavior.rb_fanout(self, key, act.kind, act.value):
                    self.sim.transmit(self.pid, dst, ("R", key, act.kind, value))

    # ---- inbound ---------------------------------------------------------
    def receive(self, src: int, payload) -> None:
        if self.halted or self.behavior.crashed:
            return
        tag = payload[0]
        if tag == "P":
            self.deliver(src, payload[1], payload[2], payload[3], False)
        elif tag == "B":
            self.rb_accept(payload[1], payload[2])
        else:
            key = payload[1]
            state = self.rb.get(key)
            if state is None:
                state = self.rb[key] = RbState.create(self.n, self.t, key[0], self.pid)
            self._rb_actions(key, rb_handle(state, Recv(src, payload[2], payload[3])))

    def rb_accept(self, key, value) -> None:
        origin, session, kind, extra = key
        if kind == RECON:
            if not (type(value) is tuple and len(value) == 2 and value[0] == extra and type(value[1]) is int):
                self.malformed(session, origin, "recon value")
                return
            self.apply_dmm(self.dmm.on_expected_broadcast(origin, session, extra, value[1]))
        self.deliver(origin, session, kind, value, True)

    def deliver(self, src: int, session, kind: str, body, via_rb: bool) -> None:
        inst = self.instances.get(session)
        if inst is None:
            self.prestart.setdefault(session, []).append((src, session, kind, body, via_rb))
            return
        dmm = self.dmm
        # common case: nothing known or pending about src, so no table lookups
        verdict = dmm.filter(src, session) if src in dmm.D or dmm._blocking.get(src) else FORWARD
        if verdict is FORWARD:
            sim = self.sim
            if sim.full:
                sim.record_filter("forward", self.pid, session, src)
            else:
                key = (self.pid, src, session)
                seen = sim._first_forward
                if key not in seen:
                    seen.add(key)
                    sim.trace.events.append(("forward", sim.step, self.pid, session, src))
            inst.on_message(src, kind, body, via_rb)
        elif self.observe_control and via_rb and kind in CONTROL_KINDS:
            # set and acknowledgement broadcasts carry no field values; under
            # "observe" they are read from shunned senders but not acted on as theirs
            self.sim.record_filter("observe", self.pid, session, src)
            inst.on_message(src, kind, body, via_rb)
        elif verdict is DELAY:
            self.sim.record_filter("delay", self.pid, session, src)
            self.dmm.hold(src, (src, session, kind, body, via_rb))
        else:
            self.sim.record_filter("discard", self.pid, session, src)

    def malformed(self, session, src: int, why: str) -> None:
        self.sim.record("malformed", self.pid, session, [src, why])

    # ---- sessions --------------------------------------------------------
    def start_session(self, session, inst) -> None:
        self.instances[session] = inst
        idx = self.dmm.start(session)
        self.sim.record("session-start", self.pid, session, idx)
        if session in self.prestart:
            self.sim.soon.append((self._flush, session))

    def _flush(self, session) -> None:
        for item in self.prestart.pop(session, ()):
            self.deliver(*item)

    def complete_session(self, session) -> None:
        idx = self.dmm.complete(session)
        self.sim.record("session-complete", self.pid, session, idx)

    def output(self, session, value) -> None:
        self.sim.record("output", self.pid, session, value)

    def finish(self) -> None:
        if not self.done:
            self.done = True
            self.sim.finished(self.pid)

    def halt(self) -> None:
        self.sim.record("halt", self.pid, None, None)
        self.halted = True
        self.finish()

    # ---- DMM glue --------------------------------------------------------
    def record_ack(self, j: int, l: int, session, x: int) -> None:
        self.sim.record("tuple-add", self.pid, session, ["ack", j, l, x])
        self.apply_dmm(self.dmm.record_ack(j, l, session, x))

    def record_deal(self, j: int, session, x: int) -> None:
        self.sim.record("tuple-add", self.pid, session, ["deal", j, self.pid, x])
        self.apply_dmm(self.dmm.record_deal(j, session, x))

    def drop_session_deals(self, session) -> None:
        self.apply_dmm(self.dmm.drop_session_deals(session))

    def apply_dmm(self, events) -> None:
        for kind, j, tup in events:
            if kind == "unblock":
                self.sim.soon.append((self._release, j))
                continue
            if tup[0] == "ack":
                which, l, session = "ack", tup[2], tup[3]
            else:
                which, l, session = "deal", self.pid, tup[2]
            if kind == "tuple-remove":
                self.sim.record("tuple-remove", self.pid, session, [which, j, l])
            else:
                self.sim.record("shun-add", self.pid, session, [j, which, l])
                self.sim.soon.append((self._release, j))

    def _release(self, j: int) -> None:
        for item in self.dmm.take_delayed(j):
            self.deliver(*item)
