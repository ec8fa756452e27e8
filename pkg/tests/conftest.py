from __future__ import annotations

import pytest

from helpers import LocalCluster, build_local_cluster

# Pass/fail lines from the acceptance suite; printed in the terminal
# summary so they survive output capture.
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def cluster_3x3() -> LocalCluster:
    c = build_local_cluster(3, 3)
    yield c
    c.close()


@pytest.fixture
def cluster_1x1() -> LocalCluster:
    c = build_local_cluster(1, 1)
    yield c
    c.close()
