import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from severity_ridge import GenerationConfig, generate  # noqa: E402


@pytest.fixture(scope="session")
def cohort_42():
    """The 100k-sample seed-42 cohort used by several regression checks."""
    return generate(GenerationConfig(100_000, 42))


_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and rep.when == "call":
        _acceptance.append((item.name, rep.outcome, item.function.__doc__ or ""))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, doc in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        summary = doc.strip().splitlines()[0] if doc.strip() else name
        terminalreporter.write_line(f"[{status}] {name}: {summary}")
