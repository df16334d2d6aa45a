import numpy as np
import pytest

_acceptance_lines: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the summary."""

    def record(label: str, ok: bool, detail: str = ""):
        _acceptance_lines.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
