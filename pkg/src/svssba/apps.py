"""Per-process drivers that run a configured protocol to completion.

``build_app(cfg, node)`` returns an object with ``start()``. Sharing protocols
run ``cfg.sessions`` sessions one after another: session k + 1 starts at a
process once session k produced an output there. Broadcast sessions are
independent and run concurrently.
"""

from __future__ import annotations

from random import Random

from .ba import BaProcess
from .broadcast import Accept, Recv, Start, WrbState, wrb_handle
from .coin import Coin
from .dmm import BCAST, COIN, MW, SVSS, SessionId
from .mwsvss import MwSvss
from .svss import IdealSvss, Svss

VALUE = "VALUE"
WRB_MSG = "WRB"


def session_roles(cfg, k: int) -> tuple[int, int]:
    """(dealer, moderator) of session k."""
    dealer = cfg.dealer if cfg.dealer is not None else 1 + (cfg.seed + k - 1) % cfg.n
    moderator = cfg.moderator if cfg.moderator is not None else dealer % cfg.n + 1
    return dealer, moderator


def session_secrets(cfg) -> list[tuple[int, int]]:
    """(secret, moderator value) per session, identical at every process."""
    rng = Random(f"{cfg.seed}:config")
    out = []
    for _ in range(cfg.sessions):
        s = cfg.secret if cfg.secret is not None else rng.randrange(cfg.prime)
        out.append((s % cfg.prime, (cfg.moderator_value if cfg.moderator_value is not None else s) % cfg.prime))
    return out


def ba_inputs(cfg) -> tuple[int, ...]:
    if not isinstance(cfg.inputs, str):
        return tuple(cfg.inputs)
    if cfg.inputs in ("all0", "all1"):
        return (int(cfg.inputs[-1]),) * cfg.n
    if cfg.inputs != "random":
        from .sim import ConfigError

        raise ConfigError(f"unknown inputs {cfg.inputs!r}")
    rng = Random(f"{cfg.seed}:inputs")
    return tuple(rng.randrange(2) for _ in range(cfg.n))


class _Sequential:
    def __init__(self, cfg, node):
        self.cfg = cfg
        self.node = node
        self.secrets = session_secrets(cfg)
        self.k = 0
        self.current = None

    def start(self) -> None:
        self._next()

    def _next(self) -> None:
        self.k += 1
        if self.k > self.cfg.sessions:
            self.node.finish()
            return
        self.current = self.open(self.k)

    def open(self, k: int):
        raise NotImplementedError


class MwApp(_Sequential):
    def open(self, k):
        node = self.node
        dealer, mod = session_roles(self.cfg, k)
        secret, mod_value = self.secrets[k - 1]
        inst = MwSvss(node, SessionId(MW, k, dealer), mod, self)
        node.start_session(inst.sid, inst)
        if node.pid == dealer:
            inst.deal(secret)
        if node.pid == mod:
            inst.moderate(mod_value)
        return inst

    def on_child_share_complete(self, inst) -> None:
        inst.reconstruct()

    def on_child_output(self, inst, value) -> None:
        self._next()


class SvssApp(_Sequential):
    def open(self, k):
        node = self.node
        dealer, _ = session_roles(self.cfg, k)
        cls = Svss if self.cfg.svss_mode == "real" else IdealSvss
        inst = cls(node, SessionId(SVSS, k, dealer), self)
        inst.begin()
        if node.pid == dealer:
            inst.deal(self.secrets[k - 1][0])
        return inst

    def on_svss_share_complete(self, inst) -> None:
        inst.reconstruct()

    def on_svss_output(self, inst, value) -> None:
        self._next()


class CoinApp(_Sequential):
    def open(self, k):
        coin = Coin(self.node, SessionId(COIN, k, 0), self, self.cfg.svss_mode, self.cfg.coin_range)
        coin.begin()
        return coin

    def on_coin_output(self, coin, bit) -> None:
        pass

    def on_coin_complete(self, coin) -> None:
        self._next()


class _BroadcastSession:
    def __init__(self, app, sid):
        self.app = app
        self.sid = sid
        self.accepted = False

    def on_message(self, src, kind, body, via_rb):
        self.app.on_message(self, src, kind, body, via_rb)


class _BroadcastApp:
    """Concurrent broadcast sessions, one dealer value each."""

    def __init__(self, cfg, node):
        self.cfg = cfg
        self.node = node
        self.secrets = session_secrets(cfg)
        self.sessions = {}
        self.open_count = 0

    def start(self) -> None:
        node = self.node
        for k in range(1, self.cfg.sessions + 1):
            dealer, _ = session_roles(self.cfg, k)
            sid = SessionId(BCAST, k, dealer)
            sess = self.sessions[sid] = _BroadcastSession(self, sid)
            self.setup(sess)
            node.start_session(sid, sess)
        self.open_count = len(self.sessions)
        for sid, sess in self.sessions.items():
            if node.pid == sid.dealer:
                value = self.secrets[sid.c - 1][0]
                node.sim.record("input", node.pid, sid, {"role": "dealer", "secret": value})
                self.begin(sess, value)

    def setup(self, sess) -> None:
        pass

    def accept(self, sess, value) -> None:
        if sess.accepted:
            return
        sess.accepted = True
        self.node.output(sess.sid, value)
        self.node.complete_session(sess.sid)
        self.open_count -= 1
        if self.open_count == 0:
            self.node.finish()


class RbApp(_BroadcastApp):
    """Bracha broadcast driven directly, whatever ``rb_mode`` says."""

    def begin(self, sess, value):
        self.node.bracha_start((self.node.pid, sess.sid, VALUE, None), value)

    def on_message(self, sess, src, kind, body, via_rb):
        if kind == VALUE and via_rb and src == sess.sid.dealer:
            self.accept(sess, body)
        else:
            self.node.malformed(sess.sid, src, kind)


class WrbApp(_BroadcastApp):
    """Crusader broadcast over point-to-point messages."""

    def setup(self, sess):
        n, t = self.cfg.n, self.cfg.t
        sess.state = WrbState(n, t, sess.sid.dealer, self.node.pid)

    def begin(self, sess, value):
        self._act(sess, wrb_handle(sess.state, Start(value)))

    def on_message(self, sess, src, kind, body, via_rb):
        if via_rb or kind != WRB_MSG or type(body) is not tuple or len(body) != 2 or body[0] not in (1, 2):
            self.node.malformed(sess.sid, src, kind)
            return
        self._act(sess, wrb_handle(sess.state, Recv(src, body[0], body[1])))

    def _act(self, sess, actions):
        node = self.node
        key = (sess.sid.dealer, sess.sid, WRB_MSG, None)
        for act in actions:
            if isinstance(act, Accept):
                self.accept(sess, act.value)
                continue
            for dst, value in node.behavior.rb_fanout(node, key, act.kind, act.value):
                node.send(dst, sess.sid, WRB_MSG, (act.kind, value))


class BaApp:
    def __init__(self, cfg, node):
        self.node = node
        x = ba_inputs(cfg)[node.pid - 1]
        self.proc = BaProcess(node, x, cfg.svss_mode, cfg.max_rounds, cfg.coin_range)

    def start(self) -> None:
        self.proc.start()


_APPS = {"wrb": WrbApp, "rb": RbApp, "mwsvss": MwApp, "svss": SvssApp, "scc": CoinApp, "ba": BaApp}


def build_app(cfg, node):
    return _APPS[cfg.protocol](cfg, node)
