from __future__ import annotations

import pytest

from helpers import build_g1


@pytest.fixture
def g1():
    return build_g1()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance check, after the normal summary."""
    lines = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome not in ("error", "skipped"):
                continue
            if "test_acceptance.py" not in str(getattr(rep, "nodeid", "")):
                continue
            name = rep.nodeid.split("::", 1)[-1]
            lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status in sorted(set(lines)):
            terminalreporter.write_line(f"{status:8s} {name}")
