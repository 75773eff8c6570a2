import numpy as np
import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def emit(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
        lines.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s[7:9])):
            terminalreporter.write_line(line)
