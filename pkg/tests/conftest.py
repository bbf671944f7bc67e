import numpy as np
import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion; returns the verdict."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(name: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f" | {detail}" if detail else "")
        print(line)
        lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
