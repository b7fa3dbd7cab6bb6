"""Shunning verifiable secret sharing and asynchronous Byzantine agreement."""

from .sim import BOT, RunConfig, Simulation, Trace, detect_shun_start, run_simulation

__all__ = ["BOT", "RunConfig", "Simulation", "Trace", "detect_shun_start", "run_simulation"]
