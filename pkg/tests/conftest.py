"""Shared fixtures; collects acceptance verdicts for the end-of-run report."""

import pytest


def pytest_configure(config):
    config._acceptance_verdicts = []


@pytest.fixture(scope="session")
def verdicts(request):
    return request.config._acceptance_verdicts


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_verdicts", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
