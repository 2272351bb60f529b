import json

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def report_doc(processes):
    """Minimal behavior report; ``processes`` is a list of (pid, ppid, [api, ...])."""
    return {
        "info": {"id": 1},
        "behavior": {
            "processes": [
                {"pid": pid, "ppid": ppid, "process_name": f"p{pid}.exe",
                 "calls": [{"api": a, "time": 1.0 + i, "category": "file"} for i, a in enumerate(calls)]}
                for pid, ppid, calls in processes
            ]
        },
    }


def report_bytes(processes) -> bytes:
    return json.dumps(report_doc(processes)).encode("utf-8")


@pytest.fixture
def write_report():
    def write(path, processes):
        path.write_bytes(report_bytes(processes))
        return path

    return write


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
