"""Coin outcome frequencies and BA round counts over a seed range."""

import argparse

from svssba import RunConfig, run_simulation
from svssba.properties import ba_round_stats, coin_tally


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--svss-mode", choices=("real", "ideal"), default="real")
    args = ap.parse_args()
    t = (args.n - 1) // 3

    def runs(protocol):
        for seed in range(args.seeds):
            cfg = RunConfig(protocol=protocol, n=args.n, t=t, seed=seed, svss_mode=args.svss_mode, trace_level="summary")
            yield run_simulation(cfg)

    coins = coin_tally(runs("scc"))
    print(f"coin: {coins.runs} sessions, all-0 {coins.p0:.3f}, all-1 {coins.p1:.3f}, split {coins.split}")
    rounds = ba_round_stats(runs("ba"))
    print(f"ba: {rounds.runs} runs, mean rounds {rounds.mean_rounds:.2f}, max {rounds.max_rounds}, undecided {rounds.undecided}")


if __name__ == "__main__":
    main()
