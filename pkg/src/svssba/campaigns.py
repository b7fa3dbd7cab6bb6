"""Seed sweeps shared by the acceptance suite and the scripts."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Iterator

from .sim import RunConfig, Trace, run_simulation

SHARING_STRATEGIES = ("honest", "delay-one", "example1", "equivocating-dealer", "lying-moderator", "withhold-reconstruct")
ALL_STRATEGIES = ("honest", "fifo", "crash") + SHARING_STRATEGIES[1:]


def faulty_set(n: int, t: int, seed: int, strategy: str) -> tuple[int, ...]:
    """t faulty ids drawn from the seed; none for the honest strategy."""
    if strategy == "honest":
        return ()
    return tuple(sorted(Random(f"{seed}:faulty").sample(range(1, n + 1), t)))


def sweep(protocol: str, n: int, strategies: Iterable[str], seeds: Iterable[int], **overrides) -> Iterator[tuple[RunConfig, Trace]]:
    t = (n - 1) // 3
    seeds = list(seeds)
    for strategy in strategies:
        for seed in seeds:
            cfg = RunConfig(protocol=protocol, n=n, t=t, faulty=faulty_set(n, t, seed, strategy), adversary=strategy, seed=seed, **overrides)
            yield cfg, run_simulation(cfg)


def digest(trace: Trace) -> str:
    return hashlib.sha256(trace.to_text().encode("utf-8")).hexdigest()


@dataclass
class Tally:
    """Counts of failed verdicts by property name, with the first seed of each."""

    runs: int = 0
    failures: dict = field(default_factory=dict)

    def add(self, cfg: RunConfig, verdicts) -> None:
        self.runs += 1
        for v in verdicts:
            if not v.holds:
                count, first = self.failures.get(v.name, (0, None))
                self.failures[v.name] = (count + 1, first or (cfg.adversary, cfg.n, cfg.seed, v.explanation))

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        if self.ok:
            return f"{self.runs} runs, no violations"
        parts = [f"{name} x{count} (first: {first})" for name, (count, first) in sorted(self.failures.items())]
        return f"{self.runs} runs; " + "; ".join(parts)
