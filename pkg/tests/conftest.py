import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from swipt_relay import ChannelState, SystemParams

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def pinned():
    """The worked instance used across modules: defaults with g1=0.3, g2=0.1."""
    return ChannelState(0.3, 0.1)


def log_uniform(lo, hi):
    return st.floats(np.log(lo), np.log(hi)).map(np.exp)


# at the default parameters every g1 >= 0.03 clears the gate (eta*Q*g1 >= 12 > Pd)
gains = log_uniform(0.03, 1.0)


@st.composite
def feasible_channels(draw):
    return ChannelState(float(draw(gains)), float(draw(gains)))


def random_feasible_channels(rng, count, lo=0.03, hi=1.0):
    g = np.exp(rng.uniform(np.log(lo), np.log(hi), size=(count, 2)))
    return [ChannelState(float(a), float(b)) for a, b in g]


# --- acceptance summary: one pass/fail line per criterion -------------------------

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    failed_setup = report.when == "setup" and report.outcome != "passed"
    if report.when == "call" or failed_setup:
        detail = dict(report.user_properties).get("detail", "")
        name = report.nodeid.split("::")[-1]
        _acceptance.append((name, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  {detail}")
