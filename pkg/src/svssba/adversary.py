"""Adversary: a scheduler over the envelope pool plus Byzantine behaviors.

Faulty processes run the same protocol code as honest ones; a
:class:`Behavior` intercepts the points where a Byzantine process could
deviate, for example the shares a dealer hands out or the set a moderator
admits. Every hook's default is the honest action.

Scheduling is two-level. ``priority(src, dst, payload)`` puts each new
envelope in a bucket (lower first), and ``choose`` picks inside the lowest
nonempty bucket, either uniformly at random from a seeded stream or oldest
first. The payload argument is ``None`` for envelopes between two nonfaulty
processes, so a strategy can only react to what it is allowed to see. The
simulator's fairness budget overrides all of this for starved honest traffic.

Strategy names (``RunConfig.adversary``, optionally ``name:key=value,...``):

``honest``/``random``, ``fifo``
    No deviation; random or oldest-first delivery.
``crash``
    Faulty processes never send anything.
``delay-one`` / ``delay-process-K``
    Starve one nonfaulty process (``target`` defaults to the highest honest
    id). Faulty processes crash so the starved process is actually needed.
``example1``
    At n = 4 the scripted moderated-VSS equivocation (dealer 2, moderator 1,
    process 4 starved). Elsewhere: faulty processes lie in reconstruction and
    the highest honest process is starved.
``equivocating-dealer``
    Inconsistent shares, inconsistent reliable-broadcast fan-out, flipped
    votes.
``lying-moderator``
    A faulty moderator admits everybody and pins a wrong value.
``withhold-reconstruct``
    Faulty processes never reveal anything during reconstruction.
"""

from __future__ import annotations

from .field import interpolate_unipoly, inv

STRATEGIES = (
    "honest", "random", "fifo", "crash", "delay-one", "example1",
    "equivocating-dealer", "lying-moderator", "withhold-reconstruct",
)


class Behavior:
    """Honest defaults for every deviation point."""

    crashed = False

    def __init__(self, pid: int, sim):
        self.pid = pid
        self.sim = sim
        self.rng = sim.rng_for(f"adv{pid}")

    def rb_fanout(self, node, key, kind, value):
        return [(dst, value) for dst in range(1, node.n + 1)]

    def mw_deal(self, inst, rows, polys, fpoly):
        return rows, polys, fpoly

    def mw_moderator_value(self, inst, value):
        return value

    def mw_admit(self, inst, j, honest):
        return honest

    def mw_send_ok(self, inst):
        return True

    def mw_recon_value(self, inst, l, value):
        return value

    def svss_deal(self, inst, shares):
        return shares

    def svss_child_secret(self, inst, key, value):
        return value

    def ideal_open(self, inst):
        return True

    def coin_secret(self, inst, j, value):
        return value

    def ba_vote(self, rnd, kind, value):
        return value


class Crashed(Behavior):
    crashed = True


def _bump(value, p):
    """A different value of the same shape."""
    if type(value) is int:
        return (value + 1) % p
    if type(value) is tuple and len(value) == 2 and type(value[1]) is int:
        return (value[0], (value[1] + 1) % p)
    return value


class LyingReconstructor(Behavior):
    def mw_recon_value(self, inst, l, value):
        return (value + 1) % inst.p


class Equivocator(Behavior):
    def rb_fanout(self, node, key, kind, value):
        n = node.n
        if kind != 1 or key[0] != self.pid:
            return [(dst, value) for dst in range(1, n + 1)]
        other = _bump(value, node.p)
        return [(dst, value if dst <= n // 2 else other) for dst in range(1, n + 1)]

    def mw_deal(self, inst, rows, polys, fpoly):
        p = inst.p
        mode = self.rng.randrange(4)
        victim = self.rng.randrange(1, inst.n + 1)
        rows, polys = dict(rows), dict(polys)
        if mode == 0:
            polys[victim] = tuple((v + 1) % p for v in polys[victim])
        elif mode == 1:
            rows[victim] = tuple((v + 1) % p for v in rows[victim])
        elif mode == 2 and fpoly is not None:
            fpoly = tuple((v + 1) % p for v in fpoly)
        return rows, polys, fpoly

    def mw_recon_value(self, inst, l, value):
        return (value + 1) % inst.p if self.rng.random() < 0.5 else value

    def svss_deal(self, inst, shares):
        victim = self.rng.randrange(1, inst.n + 1)
        g, h = shares[victim]
        shares = dict(shares)
        shares[victim] = (tuple((v + 1) % inst.p for v in g), h)
        return shares

    def svss_child_secret(self, inst, key, value):
        return (value + 1) % inst.p if self.rng.random() < 0.25 else value

    def coin_secret(self, inst, j, value):
        return inst.u - 1 if self.rng.random() < 0.5 else value

    def ba_vote(self, rnd, kind, value):
        return 1 - value


class LyingModerator(Behavior):
    def mw_moderator_value(self, inst, value):
        return (value + 1) % inst.p

    def mw_admit(self, inst, j, honest):
        return True


class Withholder(Behavior):
    def mw_recon_value(self, inst, l, value):
        return None

    def ideal_open(self, inst):
        return False


class Example1Dealer(Behavior):
    """Faulty dealer 2 of the scripted scenario.

    It deals honestly, then in reconstruction reports for every l other than
    the victim 3 a value chosen so that 3, which combines it with its own
    honest value, recovers points that lie on a line through (3, f(3)) with
    constant term ``secret + 1``.
    """

    victim = 3

    def mw_recon_value(self, inst, l, value):
        if inst.fl is None or l == self.victim:
            return value
        p, v = inst.p, self.victim
        f0 = {k: inst.fl[k](0) for k in range(1, inst.n + 1)}
        f = interpolate_unipoly([(1, f0[1]), (2, f0[2])], 1, p)
        target = (f(0) + 1) % p
        # h(x) = target + slope * x passes through (v, f(v))
        slope = (f0[v] - target) * inv(v, p) % p
        want0 = (target + slope * l) % p
        # line through (v, f_l(v)) and (0, want0), evaluated at this dealer
        fl_v = inst.fl[l](v)
        line_slope = (fl_v - want0) * inv(v, p) % p
        return (want0 + line_slope * self.pid) % p


# ---- scheduling ------------------------------------------------------------
class Adversary:
    fifo = False

    def __init__(self, sim, scheduler=None):
        self.sim = sim
        self.cfg = sim.cfg
        self.params = sim.cfg.adversary_params
        self.rng = sim.rng_for("sched")
        self.scheduler = scheduler

    def behavior_for(self, pid: int) -> Behavior:
        if pid in self.sim.faulty:
            return self.faulty_behavior(pid)
        return Behavior(pid, self.sim)

    def faulty_behavior(self, pid: int) -> Behavior:
        return Behavior(pid, self.sim)

    def priority(self, src: int, dst: int, payload) -> int:
        return 0

    def choose(self):
        pool = self.sim.pool
        if self.scheduler is not None:
            return self._external(pool)
        lst = pool.front()
        if self.fifo:
            env = min(lst, key=lambda e: e.id)
        else:
            env = lst[self.rng.randrange(len(lst))]
        pool.remove(env)
        return env

    def _external(self, pool):
        envs = {e.id: e for e in pool.items()}
        views = [self.sim.view(e) for e in envs.values()]
        for v in views:
            src_ok = v.src in self.sim.faulty or v.dst in self.sim.faulty
            assert src_ok or v.payload is None, "honest payload leaked to scheduler"
        picked = self.scheduler(views, self.rng)
        env = envs[picked]
        pool.remove(env)
        return env


class Fifo(Adversary):
    fifo = True


class Crash(Adversary):
    def faulty_behavior(self, pid):
        return Crashed(pid, self.sim)


class DelayOne(Adversary):
    def __init__(self, sim, scheduler=None, target=None):
        super().__init__(sim, scheduler)
        if target is None:
            target = int(self.params.get("target", 0)) or max(self.cfg.honest)
        self.target = target

    def faulty_behavior(self, pid):
        return Crashed(pid, self.sim)

    def priority(self, src, dst, payload):
        return 1 if self.target in (src, dst) else 0


class Example1Generic(DelayOne):
    def faulty_behavior(self, pid):
        return LyingReconstructor(pid, self.sim)


class Example1Scripted(Adversary):
    """The n = 4 schedule: 4 starved, 3 hears 2 first, 1 hears 3 first."""

    fifo = True

    def __init__(self, sim, scheduler=None):
        super().__init__(sim, scheduler)
        self.hold_next_1_to_3 = False

    def faulty_behavior(self, pid):
        return Example1Dealer(pid, self.sim)

    def priority(self, src, dst, payload):
        if 4 in (src, dst):
            return 9
        if src == 1 and dst == 2 and _is_recon(payload):
            self.hold_next_1_to_3 = True
        elif src == 1 and dst == 3 and self.hold_next_1_to_3:
            self.hold_next_1_to_3 = False
            return 5
        elif src == 2 and dst == 1 and _is_recon(payload):
            return 6
        return 0


def _is_recon(payload) -> bool:
    if payload is None:
        return False
    if payload[0] == "B":
        return payload[1][2] == "RECON"
    if payload[0] == "R":
        return payload[1][2] == "RECON"
    return False


class Behaved(Adversary):
    def __init__(self, sim, scheduler, cls):
        super().__init__(sim, scheduler)
        self.cls = cls

    def faulty_behavior(self, pid):
        return self.cls(pid, self.sim)


def build_adversary(sim, scheduler=None) -> Adversary:
    cfg = sim.cfg
    name = cfg.adversary_name
    if name in ("honest", "random"):
        return Adversary(sim, scheduler)
    if name == "fifo":
        return Fifo(sim, scheduler)
    if name == "crash":
        return Crash(sim, scheduler)
    if name == "delay-one":
        return DelayOne(sim, scheduler)
    if name.startswith("delay-process-"):
        return DelayOne(sim, scheduler, target=int(name.rsplit("-", 1)[1]))
    if name == "example1":
        if cfg.n == 4 and cfg.t == 1 and cfg.faulty == (2,):
            return Example1Scripted(sim, scheduler)
        return Example1Generic(sim, scheduler)
    if name == "equivocating-dealer":
        return Behaved(sim, scheduler, Equivocator)
    if name == "lying-moderator":
        return Behaved(sim, scheduler, LyingModerator)
    if name == "withhold-reconstruct":
        return Behaved(sim, scheduler, Withholder)
    from .sim import ConfigError

    raise ConfigError(f"unknown adversary {name!r}")
