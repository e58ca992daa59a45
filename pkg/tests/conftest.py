import os
import time
from pathlib import Path

# Pure-python work queue: no external threading runtime, and it keeps
# results bit-identical for any worker count.  Must be set before the
# first numba import anywhere in the session.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

_SESSION_START = time.time()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Replay the acceptance [PASS]/[FAIL] lines written during this
    # session so they are visible even with output capture on.
    report = Path(__file__).with_name("acceptance_report.txt")
    if report.exists() and report.stat().st_mtime >= _SESSION_START - 1.0:
        terminalreporter.section("acceptance criteria")
        for line in report.read_text().splitlines():
            terminalreporter.write_line(line)
