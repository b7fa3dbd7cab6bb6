"""Replay the scripted scenario in which a faulty dealer makes two nonfaulty
processes reconstruct different values, and show the shun that follows."""

from svssba import RunConfig, detect_shun_start, run_simulation

SHOWN = {"share-complete", "output", "shun-add", "status"}


def main() -> None:
    cfg = RunConfig(protocol="mwsvss", n=4, t=1, faulty=(2,), adversary="example1", seed=7, dealer=2, moderator=1)
    tr = run_simulation(cfg)
    for kind, step, pid, session, detail in tr.events:
        if kind in SHOWN and (pid in cfg.honest or kind == "status"):
            where = session.path if session is not None else "-"
            print(f"step {step:3d}  p{pid}  {kind:15s} {where:8s} {detail}")
    print("process 1 starts shunning 2 at", detect_shun_start(tr, 1, 2).path)


if __name__ == "__main__":
    main()
