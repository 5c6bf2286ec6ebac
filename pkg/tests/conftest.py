"""Collects the one-line verdicts of the acceptance criteria and prints them
at the end of the session, with or without output capture."""

import pytest

_VERDICTS = []


@pytest.fixture(scope="session")
def verdict():
    def put(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return put


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
