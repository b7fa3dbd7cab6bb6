"""Property sweep over the sharing protocols for every built-in strategy.

    python3 scripts/sharing_sweep.py --protocol svss --n 4 --seeds 200
"""

import argparse
import time

from svssba.campaigns import SHARING_STRATEGIES, Tally, sweep
from svssba.properties import check_trace

GROUPS = ["d-soundness", "tuple-liveness", "eventual-delivery", "mw", "svss"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--protocol", choices=("mwsvss", "svss"), default="mwsvss")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--sessions", type=int, default=1)
    ap.add_argument("--control-filter", choices=("strict", "observe"), default="strict")
    args = ap.parse_args()
    for strategy in SHARING_STRATEGIES:
        start, tally = time.perf_counter(), Tally()
        runs = sweep(args.protocol, args.n, [strategy], range(args.seeds), sessions=args.sessions,
                     control_filter=args.control_filter, trace_level="summary")
        for cfg, tr in runs:
            tally.add(cfg, check_trace(tr, GROUPS))
        print(f"{strategy:22s} {time.perf_counter() - start:6.1f}s  {tally.summary()}")


if __name__ == "__main__":
    main()
