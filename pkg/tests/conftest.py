import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Append a one-line verdict that is echoed in the terminal summary."""
    def add(criterion: int, ok: bool, detail: str, elapsed: float, budget: float):
        within = elapsed <= budget
        verdict = "PASS" if ok and within else "FAIL"
        _LINES.append(f"criterion {criterion}: {verdict}  {detail}  "
                      f"[{elapsed:.1f} s / budget {budget:g} s]")
        return ok and within
    return add


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
