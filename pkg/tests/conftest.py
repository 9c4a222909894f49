from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record and print the one-line outcome of an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"acceptance {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
