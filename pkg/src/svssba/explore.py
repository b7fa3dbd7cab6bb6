"""Exhaustive interleaving search for the broadcast protocols.

Both protocols count distinct senders per (message type, value), so what a
process does next depends only on how many processes it heard from for each
pair, and any subset of the messages sent so far may have arrived. That makes
the counting model exact: a global state is the tuple of honest local states,
a step lets one honest process cross one threshold that the messages sent so
far (plus up to f faulty senders, which may send both values) allow it to
cross, and every interleaving of such steps is explored.

The faulty dealer's type-1 messages go to the lower half of the honest
processes with value a and to the rest with b (``split``), or both values to
everybody. Faulty messages may be withheld forever, so a state in which no
step is possible from honest messages alone is a legitimate final state.
"""

from __future__ import annotations

from dataclasses import dataclass

NONE = None


@dataclass(frozen=True)
class ExploreResult:
    protocol: str
    states: int
    agreement_violation: tuple | None
    totality_violation: tuple | None
    accepted_values: frozenset

    @property
    def holds(self) -> bool:
        return self.agreement_violation is None and self.totality_violation is None


def _counts(states, slot, values):
    return {v: sum(1 for s in states if s[slot] == v) for v in values}


def _steps(states, protocol, n, t, f, allowed, values, with_faulty=True):
    """Yield (process index, new local state) for every enabled step."""
    extra = f if with_faulty else 0
    c2 = _counts(states, 0, values)
    c3 = _counts(states, 1, values) if protocol == "rb" else None
    for idx, (sent2, sent3, acc) in enumerate(states):
        if sent2 is NONE and with_faulty:
            for v in allowed[idx]:
                yield idx, (v, sent3, acc)
        for v in values:
            wrb_ready = c2[v] + extra >= n - t
            if protocol == "wrb":
                if acc is NONE and wrb_ready:
                    yield idx, (sent2, sent3, v)
                continue
            if sent3 is NONE and (wrb_ready or c3[v] + extra >= t + 1):
                yield idx, (sent2, v, acc)
            if acc is NONE and c3[v] + extra >= n - t:
                yield idx, (sent2, sent3, v)


def explore_broadcast(protocol: str = "wrb", n: int = 4, t: int = 1, values=("a", "b"), split: bool = True) -> ExploreResult:
    """Search every interleaving with t faulty processes, one of them the dealer."""
    if protocol not in ("wrb", "rb"):
        raise ValueError(f"unknown protocol {protocol!r}")
    h = n - t
    allowed = [((values[0] if i < h // 2 else values[1]),) if split else tuple(values) for i in range(h)]
    init = tuple((NONE, NONE, NONE) for _ in range(h))
    seen = {init}
    stack = [(init, ())]
    agree = total = None
    accepted = set()
    while stack:
        states, path = stack.pop()
        acc = {s[2] for s in states if s[2] is not NONE}
        accepted |= acc
        if len(acc) > 1 and agree is None:
            agree = path
        if protocol == "rb" and total is None and acc and any(s[2] is NONE for s in states):
            # honest messages alone allow no further step: a final state
            if next(_steps(states, protocol, n, t, t, allowed, values, with_faulty=False), None) is None:
                total = path
        for idx, new in _steps(states, protocol, n, t, t, allowed, values):
            nxt = states[:idx] + (new,) + states[idx + 1:]
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, path + ((idx + 1, new),)))
    return ExploreResult(protocol, len(seen), agree, total, frozenset(accepted))
