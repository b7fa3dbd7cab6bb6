"""Command-line campaign runner.

Examples::

    svssba --protocol ba --n 4 --t 1 --seeds 1..500 --adversary honest
    svssba --protocol mwsvss --adversary example1 --faulty 2 --seed 7 --trace-out d/
    svssba --replay d/trace_7.log

Exit status is 0 when every selected check passed, 1 on a property violation
(the offending seeds are printed) and 2 on bad flags or configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from dataclasses import dataclass, field, fields
from pathlib import Path

from .properties import CHECKERS, TraceIndex, ba_round_stats, check_trace, coin_outcomes, last_decision_round, shun_pairs
from .sim import PROTOCOLS, ConfigError, RunConfig, Trace, run_simulation


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class Campaign:
    base: RunConfig
    seeds: tuple[int, ...]
    out_dir: Path | None = None
    checks: tuple[str, ...] = field(default=tuple(CHECKERS))

    def __post_init__(self):
        if not self.seeds:
            raise UsageError("seed range is empty")
        unknown = [c for c in self.checks if c not in CHECKERS]
        if unknown:
            raise UsageError(f"unknown check group(s): {', '.join(unknown)}")

    def config(self, seed: int) -> RunConfig:
        return self.base.with_(seed=seed)


def parse_seeds(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            raise UsageError(f"bad seed range {text!r}") from None
        if b < a:
            raise UsageError(f"empty seed range {text!r}")
        return tuple(range(a, b + 1))
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"bad seed list {text!r}") from None


def parse_checks(text: str) -> tuple[str, ...]:
    if text == "all":
        return tuple(CHECKERS)
    if text == "none":
        return ()
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svssba", description="Run shunning-VSS and Byzantine agreement simulations.")
    ap.add_argument("--config", metavar="FILE", help="JSON file with RunConfig fields; flags override it")
    ap.add_argument("--protocol", choices=PROTOCOLS)
    ap.add_argument("--n", type=int)
    ap.add_argument("--t", type=int)
    ap.add_argument("--prime", type=int)
    group = ap.add_mutually_exclusive_group()
    group.add_argument("--seeds", metavar="A..B", help="inclusive seed range or comma list")
    group.add_argument("--seed", type=int)
    ap.add_argument("--faulty", metavar="i,j,...", help="faulty process ids")
    ap.add_argument("--adversary", metavar="NAME[:k=v,...]")
    ap.add_argument("--fairness-budget", type=int)
    ap.add_argument("--max-events", type=int)
    ap.add_argument("--rb-mode", choices=("ideal", "bracha"))
    ap.add_argument("--svss-mode", choices=("real", "ideal"))
    ap.add_argument("--sessions", type=int)
    ap.add_argument("--discard-rule", choices=("ordered", "immediate"))
    ap.add_argument("--control-filter", choices=("strict", "observe"), help="let set/ack broadcasts of shunned senders through")
    ap.add_argument("--drain", action="store_true", default=None, help="keep delivering after every nonfaulty process finished")
    ap.add_argument("--dealer", type=int)
    ap.add_argument("--moderator", type=int)
    ap.add_argument("--trace-level", choices=("full", "summary"))
    ap.add_argument("--trace-out", metavar="DIR", help="write trace_<seed>.log per run and summary.json")
    ap.add_argument("--replay", metavar="FILE", help="re-run a trace file's config and compare byte for byte")
    ap.add_argument("--check", default="all", metavar="all|none|group,...", help=f"groups: {', '.join(CHECKERS)}")
    ap.add_argument("--quiet", action="store_true", help="only print the summary")
    return ap


_FLAG_FIELDS = {
    "protocol": "protocol", "n": "n", "t": "t", "prime": "prime", "adversary": "adversary",
    "fairness_budget": "fairness_budget", "max_events": "max_events", "rb_mode": "rb_mode",
    "svss_mode": "svss_mode", "sessions": "sessions", "dealer": "dealer", "moderator": "moderator",
    "trace_level": "trace_level", "discard_rule": "discard_rule", "control_filter": "control_filter",
    "drain": "drain",
}


def campaign_from_args(args) -> Campaign:
    values: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        extra = set(loaded) - known - {"seeds"}
        if extra:
            raise UsageError(f"unknown config keys: {', '.join(sorted(extra))}")
        values.update(loaded)
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag)
        if v is not None:
            values[name] = v
    if args.faulty is not None:
        try:
            values["faulty"] = tuple(int(x) for x in args.faulty.split(",") if x.strip())
        except ValueError:
            raise UsageError(f"bad --faulty {args.faulty!r}") from None
    if args.seed is not None:
        seeds = (args.seed,)
    elif args.seeds is not None:
        seeds = parse_seeds(args.seeds)
    elif "seeds" in values:
        seeds = parse_seeds(str(values["seeds"]))
    else:
        seeds = (values.get("seed", 0),)
    values.pop("seeds", None)
    base = RunConfig.from_dict(values)
    out = Path(args.trace_out) if args.trace_out else None
    return Campaign(base, seeds, out, parse_checks(args.check))


@dataclass
class Report:
    runs: int = 0
    statuses: Counter = field(default_factory=Counter)
    outputs: Counter = field(default_factory=Counter)
    violations: list = field(default_factory=list)
    shun_pairs: int = 0
    max_shun_pairs: int = 0
    coin: dict | None = None
    rounds: dict | None = None

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "statuses": dict(sorted(self.statuses.items())),
            "outputs": {str(k): v for k, v in sorted(self.outputs.items(), key=lambda kv: str(kv[0]))},
            "violations": self.violations,
            "shun_pairs_total": self.shun_pairs,
            "shun_pairs_max": self.max_shun_pairs,
            "coin": self.coin,
            "rounds": self.rounds,
        }


def run_campaign(camp: Campaign, echo=print) -> Report:
    report = Report()
    if camp.out_dir is not None:
        camp.out_dir.mkdir(parents=True, exist_ok=True)
    coins, rounds = Counter(), []
    for seed in sorted(camp.seeds):
        cfg = camp.config(seed)
        trace = run_simulation(cfg)
        report.runs += 1
        report.statuses[trace.status] += 1
        if camp.out_dir is not None:
            trace.write(camp.out_dir / f"trace_{seed}.log")
        idx = TraceIndex(trace)
        for sess, info in idx.sessions.items():
            if sess.parent is None:
                for pid, (value, _) in info.outputs.items():
                    if pid in idx.honest:
                        report.outputs[value] += 1
        pairs = len(shun_pairs(idx))
        report.shun_pairs += pairs
        report.max_shun_pairs = max(report.max_shun_pairs, pairs)
        if camp.checks:
            for v in check_trace(idx, camp.checks):
                if not v.holds:
                    report.violations.append({"seed": seed, "property": v.name, "why": v.explanation, "witness": list(v.witness[:8])})
                    echo(f"VIOLATION seed={seed} {v.name}: {v.explanation}")
        if cfg.protocol == "scc":
            coins.update(coin_outcomes(idx))
        elif cfg.protocol == "ba":
            rounds.append(last_decision_round(idx))
    if coins:
        report.coin = {"coins": sum(coins.values()), "all_zero": coins["zero"], "all_one": coins["one"], "split": coins["split"]}
    if rounds:
        try:
            st = ba_round_stats(rounds)
            report.rounds = {"runs": st.runs, "mean": round(st.mean_rounds, 4), "max": st.max_rounds, "undecided": st.undecided}
        except ValueError:
            report.rounds = {"runs": len(rounds), "mean": None, "max": None, "undecided": len(rounds)}
    return report


def format_report(camp: Campaign, report: Report) -> str:
    b = camp.base
    lines = [
        f"protocol={b.protocol} n={b.n} t={b.t} faulty={list(b.faulty)} adversary={b.adversary} seeds={len(camp.seeds)}",
        f"runs: {report.runs}  statuses: {dict(sorted(report.statuses.items()))}",
    ]
    if len(report.outputs) <= 8:
        lines.append(f"nonfaulty top-level outputs: {dict(sorted(report.outputs.items(), key=lambda kv: str(kv[0])))}")
    else:
        lines.append(f"nonfaulty top-level outputs: {sum(report.outputs.values())} across {len(report.outputs)} values")
    lines.append(f"shun pairs: total {report.shun_pairs}, max per run {report.max_shun_pairs}")
    if report.coin:
        c = report.coin
        lines.append(f"coin: {c['coins']} sessions, all-0 {c['all_zero'] / c['coins']:.4f}, all-1 {c['all_one'] / c['coins']:.4f}, split {c['split']}")
    if report.rounds:
        r = report.rounds
        lines.append(f"rounds: mean {r['mean']}, max {r['max']}, undecided runs {r['undecided']}")
    seeds = sorted({v["seed"] for v in report.violations})
    lines.append(f"violations: {len(report.violations)}" + (f" (replay seeds: {', '.join(map(str, seeds))})" if seeds else ""))
    return "\n".join(lines)


def replay(path: str, echo=print) -> int:
    try:
        original = Path(path).read_text(encoding="utf-8")
        trace = Trace.parse(original.splitlines())
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read trace {path}: {exc}") from None
    again = run_simulation(trace.config)
    outs = {f"{pid}@{sess.path}": v for (pid, sess), v in again.outputs().items() if sess.parent is None}
    echo(f"replayed seed {trace.config.seed}: status {again.status}, outputs {json.dumps(outs, default=repr, sort_keys=True)}")
    if again.to_text() == original:
        echo("identical trace")
        return 0
    echo("trace differs from the recorded one")
    return 1


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.replay:
            return replay(args.replay)
        camp = campaign_from_args(args)
        echo = (lambda *_: None) if args.quiet else print
        report = run_campaign(camp, echo)
    except (UsageError, ConfigError, TypeError) as exc:
        print(f"svssba: error: {exc}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return 2
    print(format_report(camp, report))
    if camp.out_dir is not None:
        (camp.out_dir / "summary.json").write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 1 if report.violations else 0


if __name__ == "__main__":
    sys.exit(main())
