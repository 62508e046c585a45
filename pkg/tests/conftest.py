"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

import re

import pytest

from travlr.dataset import DatasetSpec, SplitSizes, build_dataset

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if match:
        _CRITERIA[int(match.group(1))] = (match.group(2), report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, outcome = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"criterion {number} ({name}): {status}")


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A tiny comparison dataset shared by tests that only need layout."""
    root = tmp_path_factory.mktemp("small") / "ds"
    spec = DatasetSpec(task="comparison", seed=11, sizes=SplitSizes(40, 20, 20, 40))
    build_dataset(spec, root, jobs=1)
    return root
