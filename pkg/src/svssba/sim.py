"""Deterministic asynchronous network simulator.

One :class:`Simulation` owns ``n`` processes, a pool of in-flight envelopes and
an adversarial scheduler. Channels are private and authenticated: the scheduler
only sees payloads of envelopes that touch a faulty process. Every event lands
in a :class:`Trace`, which is what the property checkers consume.
"""

from __future__ import annotations

import gc
import json
from collections import deque
from dataclasses import asdict, dataclass, field, fields, replace
from random import Random
from typing import Any, Iterable

from .dmm import SessionId, KIND_NAMES
from .field import DEFAULT_PRIME, check_prime

PROTOCOLS = ("wrb", "rb", "mwsvss", "svss", "scc", "ba")


class ConfigError(ValueError):
    pass


class ForgeryError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    protocol: str = "rb"
    n: int = 4
    t: int = 1
    faulty: tuple[int, ...] = ()
    adversary: str = "honest"
    seed: int = 0
    prime: int = DEFAULT_PRIME
    fairness_budget: int | None = None
    max_events: int = 1_000_000
    rb_mode: str = "ideal"
    svss_mode: str = "real"
    sessions: int = 1
    dealer: int | None = None
    moderator: int | None = None
    secret: int | None = None
    moderator_value: int | None = None
    inputs: tuple[int, ...] | str = "random"
    max_rounds: int = 40
    coin_range: int | None = None
    drain: bool | None = None
    trace_level: str = "full"
    deal_key: str = "tuple-session"
    discard_rule: str = "ordered"
    control_filter: str = "strict"

    def __post_init__(self):
        object.__setattr__(self, "faulty", tuple(sorted(set(self.faulty))))
        if not isinstance(self.inputs, str):
            object.__setattr__(self, "inputs", tuple(self.inputs))
        self.validate()

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.t < 0 or self.n <= 3 * self.t:
            raise ConfigError(f"need n > 3t (n={self.n}, t={self.t})")
        if len(self.faulty) > self.t:
            raise ConfigError("more faulty processes than t")
        if any(not 1 <= f <= self.n for f in self.faulty):
            raise ConfigError("faulty id outside [1, n]")
        if self.prime <= self.n:
            raise ConfigError("field must have more than n elements")
        if self.rb_mode not in ("ideal", "bracha"):
            raise ConfigError(f"unknown rb_mode {self.rb_mode!r}")
        if self.svss_mode not in ("real", "ideal"):
            raise ConfigError(f"unknown svss_mode {self.svss_mode!r}")
        if self.trace_level not in ("full", "summary"):
            raise ConfigError(f"unknown trace_level {self.trace_level!r}")
        if self.deal_key not in ("tuple-session", "literal"):
            raise ConfigError(f"unknown deal_key {self.deal_key!r}")
        if self.discard_rule not in ("ordered", "immediate"):
            raise ConfigError(f"unknown discard_rule {self.discard_rule!r}")
        if self.control_filter not in ("strict", "observe"):
            raise ConfigError(f"unknown control_filter {self.control_filter!r}")
        if self.sessions < 1 or self.max_events < 1:
            raise ConfigError("sessions and max_events must be positive")
        for role in (self.dealer, self.moderator):
            if role is not None and not 1 <= role <= self.n:
                raise ConfigError("role id outside [1, n]")
        if not isinstance(self.inputs, str) and len(self.inputs) != self.n:
            raise ConfigError("explicit inputs need one bit per process")

    @property
    def budget(self) -> int:
        return self.fairness_budget if self.fairness_budget else 10 * self.n * self.n

    @property
    def honest(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if i not in self.faulty)

    @property
    def adversary_name(self) -> str:
        return self.adversary.split(":", 1)[0]

    @property
    def adversary_params(self) -> dict[str, str]:
        if ":" not in self.adversary:
            return {}
        out = {}
        for item in self.adversary.split(":", 1)[1].split(","):
            if item:
                k, _, v = item.partition("=")
                out[k.strip()] = v.strip()
        return out

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in known}
        if "faulty" in kw:
            kw["faulty"] = tuple(kw["faulty"])
        if isinstance(kw.get("inputs"), list):
            kw["inputs"] = tuple(kw["inputs"])
        return cls(**kw)

    def with_(self, **kw) -> RunConfig:
        return replace(self, **kw)


class Envelope:
    __slots__ = ("id", "src", "dst", "payload", "sent", "done", "prio", "slot", "honest")

    def __init__(self, eid, src, dst, payload, sent, honest):
        self.id = eid
        self.src = src
        self.dst = dst
        self.payload = payload
        self.sent = sent
        self.done = False
        self.prio = 0
        self.slot = -1
        self.honest = honest


@dataclass(frozen=True)
class EnvelopeView:
    """What the adversary may know about an in-flight envelope."""

    id: int
    src: int
    dst: int
    sent: int
    payload: Any


class Pool:
    """Pending envelopes bucketed by scheduler priority (lower is sooner)."""

    def __init__(self):
        self.buckets: dict[int, list[Envelope]] = {}
        self.size = 0

    def add(self, env: Envelope) -> None:
        lst = self.buckets.get(env.prio)
        if lst is None:
            lst = self.buckets[env.prio] = []
        env.slot = len(lst)
        lst.append(env)
        self.size += 1

    def remove(self, env: Envelope) -> None:
        lst = self.buckets[env.prio]
        last = lst.pop()
        if last is not env:
            lst[env.slot] = last
            last.slot = env.slot
        self.size -= 1

    def front(self) -> list[Envelope] | None:
        best = None
        for prio, lst in self.buckets.items():
            if lst and (best is None or prio < best):
                best = prio
        return None if best is None else self.buckets[best]

    def items(self) -> Iterable[Envelope]:
        for prio in sorted(self.buckets):
            yield from self.buckets[prio]


class _Bot:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BOT"

    def __reduce__(self):
        return (_Bot, ())


BOT = _Bot()


class Trace:
    """Ordered event log of one run.

    Events are tuples ``(kind, step, process, session, detail)``.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.events: list[tuple] = []
        self.status = "running"
        self.steps = 0

    def __len__(self):
        return len(self.events)

    def of_kind(self, *kinds: str):
        return [e for e in self.events if e[0] in kinds]

    def outputs(self, session: SessionId | None = None) -> dict:
        """``{(pid, session): value}`` of every output event."""
        out = {}
        for kind, _, pid, sess, detail in self.events:
            if kind == "output" and (session is None or sess == session):
                out[(pid, sess)] = detail
        return out

    def final_outputs(self) -> dict[int, Any]:
        """Top-level outputs per process (sessions without a parent)."""
        out = {}
        for kind, _, pid, sess, detail in self.events:
            if kind == "output" and sess is not None and sess.parent is None:
                out.setdefault(pid, []).append(detail)
        return out

    # ---- export ----------------------------------------------------------
    def lines(self) -> Iterable[str]:
        yield _line("config", 0, 0, None, json.loads(self.config.to_json()))
        for ev in self.events:
            yield _line(*ev)
        yield _line("end", self.steps, 0, None, self.status)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line)
                fh.write("\n")

    def to_text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    @classmethod
    def read(cls, path) -> Trace:
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read().splitlines())

    @classmethod
    def parse(cls, lines: Iterable[str]) -> Trace:
        trace = None
        for line in lines:
            if not line:
                continue
            kind, step, pid, sc, sd, detail = line.split("\t", 5)
            detail = json.loads(detail)
            if kind == "config":
                trace = cls(RunConfig.from_dict(detail))
                continue
            if kind == "end":
                trace.status = detail
                trace.steps = int(step)
                continue
            session = None if sc == "-" else parse_session(sc, int(sd))
            detail = BOT if detail == "bot" else detail
            trace.events.append((kind, int(step), int(pid), session, detail))
        if trace is None:
            raise ValueError("trace has no config line")
        return trace


_KIND_CODES = {v: k for k, v in KIND_NAMES.items()}


_FIELDS: dict = {}


def _session_fields(session: SessionId | None) -> tuple[str, str]:
    if session is None:
        return "-", "-"
    got = _FIELDS.get(session)
    if got is None:
        own = f"{KIND_NAMES.get(session.kind, session.kind)}:{session.c}"
        c = own if session.parent is None else f"{session.parent.path}/{own}"
        got = _FIELDS[session] = (c, str(session.dealer))
    return got


def parse_session(c_field: str, dealer: int) -> SessionId:
    parts = c_field.split("/")
    parent = None
    for part in parts[:-1]:
        kind, _, rest = part.partition(":")
        c, _, d = rest.partition(".")
        parent = SessionId(_KIND_CODES[kind], int(c), int(d), parent)
    kind, _, c = parts[-1].partition(":")
    return SessionId(_KIND_CODES[kind], int(c), dealer, parent)


def jsonable(x):
    if x is BOT:
        return "bot"
    if isinstance(x, SessionId):
        return x.path
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(jsonable(v) for v in x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if hasattr(x, "coeffs"):
        return jsonable(x.coeffs)
    return x


_STRINGS: dict = {}


def _flat_list(items) -> str | None:
    """JSON for a sequence of ints and strings, or None for anything nested."""
    parts = []
    for v in items:
        tv = type(v)
        if tv is int:
            parts.append(str(v))
        elif tv is str:
            enc = _STRINGS.get(v)
            if enc is None:
                enc = _STRINGS[v] = json.dumps(v, ensure_ascii=False)
            parts.append(enc)
        else:
            return None
    return "[" + ",".join(parts) + "]"


def _line(kind, step, pid, session, detail) -> str:
    c, d = _session_fields(session)
    # plain ints and None dominate; json.dumps would render them identically
    if type(detail) is int:
        body = str(detail)
    elif detail is None:
        body = "null"
    else:
        body = _flat_list(detail) if type(detail) in (list, tuple) else None
        if body is None:
            body = json.dumps(jsonable(detail), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return f"{kind}\t{step}\t{pid}\t{c}\t{d}\t{body}"


def payload_session(payload):
    if payload[0] == "P":
        return payload[1]
    return payload[1][1]


class Simulation:
    def __init__(self, config: RunConfig, scheduler=None):
        from .adversary import Adversary, build_adversary

        check_prime(config.prime)
        self.cfg = config
        self.n, self.t, self.p = config.n, config.t, config.prime
        self.faulty = frozenset(config.faulty)
        self.trace = Trace(config)
        self.full = config.trace_level == "full"
        self.step = 0
        self._next_id = 0
        self.pool = Pool()
        self.fair: deque[Envelope] = deque()
        self.soon: deque = deque()
        self.rb_used: set = set()
        self.functionality: dict = {}
        self._first_forward: set = set()
        self.adversary = build_adversary(self, scheduler)
        # skip the per-envelope hook when the strategy keeps the default single bucket
        overridden = type(self.adversary).priority is not Adversary.priority
        self._prioritize = self.adversary.priority if overridden else None
        self.nodes = [None]
        self.remaining = 0
        self._build_nodes()

    # ---- construction ----------------------------------------------------
    def _build_nodes(self) -> None:
        from .apps import build_app
        from .node import Node

        for pid in range(1, self.n + 1):
            node = Node(self, pid, self.adversary.behavior_for(pid))
            self.nodes.append(node)
        for pid in range(1, self.n + 1):
            node = self.nodes[pid]
            node.app = build_app(self.cfg, node)
            if pid not in self.faulty:
                self.remaining += 1

    def rng_for(self, label) -> Random:
        return Random(f"{self.cfg.seed}:{label}")

    # ---- recording -------------------------------------------------------
    def record(self, kind: str, pid: int, session, detail=None) -> None:
        self.trace.events.append((kind, self.step, pid, session, detail))

    def record_filter(self, kind: str, pid: int, session, sender: int) -> None:
        if self.full or kind != "forward":
            self.trace.events.append((kind, self.step, pid, session, sender))
            return
        key = (pid, sender, session)
        if key not in self._first_forward:
            self._first_forward.add(key)
            self.trace.events.append((kind, self.step, pid, session, sender))

    # ---- transport -------------------------------------------------------
    def transmit(self, src: int, dst: int, payload) -> None:
        eid = self._next_id
        self._next_id = eid + 1
        if self.full:
            session = payload_session(payload)
            self.trace.events.append(("send", self.step, src, session, (eid, dst, payload)))
            if src == dst:
                self.trace.events.append(("deliver", self.step, dst, session, (eid, src, payload)))
        if src == dst:
            self.soon.append((self.nodes[dst].receive, src, payload))
            return
        faulty = self.faulty
        honest = src not in faulty and dst not in faulty
        env = Envelope(eid, src, dst, payload, self.step, honest)
        if self._prioritize is not None:
            env.prio = self._prioritize(src, dst, None if honest else payload)
        self.pool.add(env)
        if honest:
            self.fair.append(env)

    def inject(self, src: int, dst: int, payload) -> None:
        """Adversary entry point for arbitrary messages on faulty channels."""
        if src not in self.faulty:
            raise ForgeryError(f"adversary tried to send as nonfaulty process {src}")
        self.transmit(src, dst, payload)

    def rb_broadcast(self, node, key, value) -> None:
        if self.cfg.rb_mode == "ideal":
            if key in self.rb_used:
                return
            self.rb_used.add(key)
            payload = ("B", key, value)
            for dst in range(1, self.n + 1):
                self.transmit(node.pid, dst, payload)
        else:
            node.bracha_start(key, value)

    def view(self, env: Envelope) -> EnvelopeView:
        return EnvelopeView(env.id, env.src, env.dst, env.sent, None if env.honest else env.payload)

    def pending_views(self) -> list[EnvelopeView]:
        return [self.view(e) for e in self.pool.items()]

    def finished(self, pid: int) -> None:
        if pid not in self.faulty:
            self.remaining -= 1

    # ---- main loop -------------------------------------------------------
    def _drain_soon(self) -> None:
        soon = self.soon
        while soon:
            fn, *args = soon.popleft()
            fn(*args)

    def run(self) -> Trace:
        # the event log is acyclic garbage-wise; cyclic GC passes only cost time
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            return self._run()
        finally:
            if was_enabled:
                gc.enable()

    def _run(self) -> Trace:
        cfg = self.cfg
        drain = cfg.drain if cfg.drain is not None else cfg.protocol in ("mwsvss", "svss", "wrb", "rb")
        for pid in range(1, self.n + 1):
            node = self.nodes[pid]
            if not node.behavior.crashed:
                node.app.start()
            self._drain_soon()
        full = self.full
        events = self.trace.events
        faulty = self.faulty
        nodes = self.nodes
        fair = self.fair
        pool = self.pool
        soon = self.soon
        budget = cfg.budget
        max_events = cfg.max_events
        choose = self.adversary.choose
        status = None
        while True:
            if self.remaining <= 0 and not drain:
                status = "terminated"
                break
            if self.step >= max_events:
                status = "cutoff"
                break
            while fair and fair[0].done:
                fair.popleft()
            if fair and self.step - fair[0].sent >= budget:
                env = fair.popleft()
                pool.remove(env)
            elif pool.size:
                env = choose()
            else:
                status = "terminated" if self.remaining <= 0 else "quiescent"
                break
            env.done = True
            self.step += 1
            dst = env.dst
            if full or dst in faulty:
                events.append(("deliver", self.step, dst, payload_session(env.payload), (env.id, env.src, env.payload)))
            nodes[dst].receive(env.src, env.payload)
            if soon:
                self._drain_soon()
        pending_honest = sum(1 for e in self.pool.items() if e.honest)
        self.record("status", 0, None, {"status": status, "pending_honest": pending_honest})
        self.trace.status = status
        self.trace.steps = self.step
        return self.trace


def run_simulation(config: RunConfig, scheduler=None) -> Trace:
    return Simulation(config, scheduler).run()


# ---- shunning analysis ---------------------------------------------------
class ShunView:
    """What process i's own events say about whom it ignores.

    j is *shunned by i starting in S* when S completed at i, i acted on some
    message of j inside S, i acted on no message of j in any session that
    started after S completed, and some broadcast i expected from j is still
    outstanding at the end of the run in a session that completed no later
    than S. The outstanding tuple is what makes the shun permanent: every
    session i starts afterwards delays (or discards) j for good.
    """

    def __init__(self, trace: Trace, i: int):
        self.i = i
        self.start: dict[SessionId, int] = {}
        self.complete: dict[SessionId, int] = {}
        self.forwards: dict[int, set] = {}
        self.detected: set[int] = set()
        self._starts: dict[int, SessionId | None] = {}
        literal = trace.config.deal_key == "literal"
        tuples: dict[tuple, SessionId] = {}
        for kind, _, pid, sess, detail in trace.events:
            if pid != i:
                continue
            if kind == "forward":
                self.forwards.setdefault(detail, set()).add(sess)
            elif kind == "session-start":
                self.start[sess] = detail
            elif kind == "session-complete":
                self.complete[sess] = detail
            elif kind == "tuple-add":
                which, j = detail[0], detail[1]
                ks = sess.with_dealer(j) if literal and which == "deal" else sess
                tuples[(which, j, detail[2], sess)] = ks
            elif kind == "tuple-remove":
                tuples.pop((detail[0], detail[1], detail[2], sess), None)
            elif kind == "shun-add":
                self.detected.add(detail[0])
        # j -> earliest completion index of a session holding j's tuple forever
        self.pinned: dict[int, int] = {}
        for (_, j, _, _), ks in tuples.items():
            ci = self.complete.get(ks)
            if ci is not None and ci < self.pinned.get(j, 1 << 62):
                self.pinned[j] = ci

    def shunned_in(self, j: int, session: SessionId) -> bool:
        ci = self.complete.get(session)
        pin = self.pinned.get(j)
        if ci is None or pin is None or pin > ci:
            return False
        fwd = self.forwards.get(j, ())
        if not any(f.within(session) for f in fwd):
            return False
        start = self.start
        return all(start.get(f, 0) < ci for f in fwd)

    def shun_start(self, j: int) -> SessionId | None:
        """The qualifying session that completed first at i, or None."""
        if j not in self.pinned:
            return None
        memo = self._starts
        if j not in memo:
            memo[j] = next(
                (s for s in sorted(self.complete, key=self.complete.__getitem__) if self.shunned_in(j, s)),
                None,
            )
        return memo[j]

    def shunned(self) -> dict[int, SessionId]:
        out = {}
        for j in self.pinned:
            s = self.shun_start(j)
            if s is not None:
                out[j] = s
        return out


def shun_starts(trace: Trace, i: int) -> dict[int, SessionId]:
    """Shun-start session for every j that i shuns for good."""
    return ShunView(trace, i).shunned()


def shunned_in(trace: Trace, i: int, j: int, session: SessionId) -> bool:
    return ShunView(trace, i).shunned_in(j, session)


def detect_shun_start(trace: Trace, i: int, j: int) -> SessionId | None:
    """Earliest-completing session in which i starts shunning j, or None."""
    return ShunView(trace, i).shun_start(j)
