import os

import pytest
from hypothesis import HealthCheck, settings

from mrfpreempt.model import RouteFlow, make_instance

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def two_twins():
    """One short link, two identical flows, either one is enough."""
    flows = [RouteFlow(1, 1, 3.0, 1, 1), RouteFlow(2, 1, 3.0, 1, 1)]
    return make_instance(1, flows, 0.0, 3.0, 2)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
