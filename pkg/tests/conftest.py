"""Shared fixtures; acceptance criteria report one line each at the end of the run."""

import numpy as np
import pytest

_CRITERIA: list[tuple[str, bool | None, str]] = []


@pytest.fixture
def criterion():
    def record(name: str, passed: bool | None, detail: str = "") -> bool | None:
        """``passed=None`` marks a criterion that could not be run."""
        _CRITERIA.append((name, None if passed is None else bool(passed), detail))
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{tag}  {name}  {detail}")
