from __future__ import annotations

import pytest

from readaloud.audio import synth_utterance
from readaloud.item_bank import default_bank
from readaloud.recognizer import build_template

TEMPLATE_SEED = 7919


@pytest.fixture(scope="session")
def bank():
    return default_bank()


@pytest.fixture(scope="session")
def templates(bank):
    """One clean template per default-bank item; shared, so build once."""
    return {
        item.item_id: build_template(item.item_id, synth_utterance(item.item_id, seed=TEMPLATE_SEED))
        for item in bank.items
    }


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, ()):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid or getattr(report, "when", "call") != "call":
                continue
            name = nodeid.split("::")[-1]
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append((name, status))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}")
