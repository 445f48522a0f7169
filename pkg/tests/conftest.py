import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record and immediately print one pass/fail line for an acceptance criterion."""

    def emit(number: int, name: str, ok: bool, detail: str, seconds: float, limit: float | None = None):
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {name}: {detail}; {seconds:.1f} s{budget}"
        VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
