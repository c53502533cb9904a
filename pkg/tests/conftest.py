import re

import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; printed in the terminal summary."""

    def record(number, description, ok, detail=""):
        _ACCEPTANCE.append((number, description, bool(ok), detail))
        return bool(ok)

    return record


def _order(row):
    number = str(row[0])
    return int(re.match(r"\d+", number).group()), number


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, ok, detail in sorted(_ACCEPTANCE, key=_order):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}: {description}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
