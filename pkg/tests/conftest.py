import pytest
from hypothesis import settings

from svssba import sim

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# every trace produced anywhere in the suite is screened for D-soundness
SEEN = {"traces": 0, "bad": []}
ACCEPTANCE_LINES: list[str] = []


def _screen(trace):
    SEEN["traces"] += 1
    honest = set(trace.config.honest)
    for kind, _, pid, _, detail in trace.events:
        if kind == "shun-add" and pid in honest and detail[0] in honest:
            SEEN["bad"].append((trace.config, pid, detail[0]))


@pytest.fixture(autouse=True, scope="session")
def _watch_traces():
    original = sim.Simulation.run

    def run(self):
        trace = original(self)
        _screen(trace)
        return trace

    sim.Simulation.run = run
    yield
    sim.Simulation.run = original


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(f"D-soundness screen: {SEEN['traces']} traces, {len(SEEN['bad'])} violations")


def pytest_sessionfinish(session, exitstatus):
    if SEEN["bad"] and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_collection_modifyitems(session, config, items):
    # acceptance last, and the D-soundness verdict after every other trace
    def rank(item):
        if item.module.__name__ != "test_acceptance":
            return 0
        return 2 if item.name == "test_criterion_8_d_soundness" else 1

    items.sort(key=rank)
