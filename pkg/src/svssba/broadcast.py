"""Crusader broadcast (WRB) and Bracha reliable broadcast (RB) state machines.

Both machines are transport-agnostic: ``handle`` consumes one event and returns
actions. ``SendAll(kind, value)`` means send ``(kind, value)`` to every process,
including the sender itself. Values must be hashable; upper layers pass
canonical tuples (sets are sorted tuples) so equality is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable


@dataclass(frozen=True)
class Start:
    value: Hashable


@dataclass(frozen=True)
class Recv:
    sender: int
    kind: int
    value: Hashable


@dataclass(frozen=True)
class SendAll:
    kind: int
    value: Hashable


@dataclass(frozen=True)
class Accept:
    value: Hashable


_NONE = object()


@dataclass
class WrbState:
    n: int
    t: int
    dealer: int
    me: int
    sent_type2: bool = False
    type2: dict = field(default_factory=dict)
    accepted: object = _NONE
    ignored: int = 0

    @property
    def has_accepted(self) -> bool:
        return self.accepted is not _NONE


def wrb_handle(state: WrbState, event) -> list:
    if isinstance(event, Start):
        if state.me != state.dealer:
            state.ignored += 1
            return []
        return [SendAll(1, event.value)]
    if event.kind == 1:
        if event.sender != state.dealer or state.sent_type2:
            state.ignored += 1
            return []
        state.sent_type2 = True
        return [SendAll(2, event.value)]
    if event.kind == 2:
        senders = state.type2.setdefault(event.value, set())
        if event.sender in senders:
            return []
        senders.add(event.sender)
        if not state.has_accepted and len(senders) >= state.n - state.t:
            state.accepted = event.value
            return [Accept(event.value)]
        return []
    state.ignored += 1
    return []


@dataclass
class RbState:
    wrb: WrbState
    sent_type3: bool = False
    type3: dict = field(default_factory=dict)
    accepted: object = _NONE

    @classmethod
    def create(cls, n: int, t: int, dealer: int, me: int) -> RbState:
        return cls(WrbState(n, t, dealer, me))

    @property
    def has_accepted(self) -> bool:
        return self.accepted is not _NONE


def rb_handle(state: RbState, event) -> list:
    n, t = state.wrb.n, state.wrb.t
    if isinstance(event, Start) or event.kind in (1, 2):
        out = []
        for act in wrb_handle(state.wrb, event):
            if isinstance(act, Accept):
                if not state.sent_type3:
                    state.sent_type3 = True
                    out.append(SendAll(3, act.value))
            else:
                out.append(act)
        return out
    if event.kind != 3:
        state.wrb.ignored += 1
        return []
    senders = state.type3.setdefault(event.value, set())
    if event.sender in senders:
        return []
    senders.add(event.sender)
    out = []
    if len(senders) >= t + 1 and not state.sent_type3:
        state.sent_type3 = True
        out.append(SendAll(3, event.value))
    if len(senders) >= n - t and not state.has_accepted:
        state.accepted = event.value
        out.append(Accept(event.value))
    return out
