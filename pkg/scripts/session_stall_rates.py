"""Count stalled multi-session MW-SVSS runs under the strict and observe
control filters (see the README section on the known liveness gap)."""

import argparse

from svssba.campaigns import SHARING_STRATEGIES, Tally, sweep
from svssba.properties import check_trace


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--sessions", type=int, default=3)
    args = ap.parse_args()
    for mode in ("strict", "observe"):
        tally = Tally()
        for cfg, tr in sweep("mwsvss", args.n, SHARING_STRATEGIES, range(args.seeds), sessions=args.sessions,
                             control_filter=mode, trace_level="summary"):
            tally.add(cfg, check_trace(tr, ["mw", "d-soundness"]))
        print(f"{mode:8s} {tally.summary()}")


if __name__ == "__main__":
    main()
