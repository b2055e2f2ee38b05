import pytest

_RESULTS = []


class Criteria:
    """Collects one pass/fail line per acceptance criterion."""

    def check(self, number, name, ok, detail=""):
        _RESULTS.append((number, name, bool(ok), detail))
        assert ok, f"criterion {number} ({name}) failed: {detail}"


@pytest.fixture
def criterion():
    return Criteria()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}")
