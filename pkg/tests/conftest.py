import json
from pathlib import Path

import pytest

from redplan.assignment import BatchingPlan, balanced_plan, cyclic_plan

DATA = Path(__file__).parent / "data"

_criteria: dict[str, list[tuple[str, str]]] = {}


@pytest.fixture(scope="session")
def six_worker_schemes():
    """Cyclic, hybrid and non-overlapping layouts for N=6, B=3."""
    hybrid = BatchingPlan.from_dict(json.loads((DATA / "scheme2_n6.json").read_text()))
    return {"T1": cyclic_plan(6, 3), "T2": hybrid, "T3": balanced_plan(6, 3)}


def pytest_configure(config):
    for k in range(1, 11):
        config.addinivalue_line("markers", f"criterion_{k}: acceptance criterion {k}")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key in report.keywords:
        if key.startswith("criterion_"):
            _criteria.setdefault(key.split("_", 1)[1], []).append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria, key=int):
        outcomes = [o for _, o in _criteria[k]]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {k:>2}: {verdict} ({len(outcomes)} checks)")
