import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request, capsys):
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""
    def emit(number: int, ok: bool, detail: str, warning: str = ""):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number:2d}: {status}  {detail}"
        if warning:
            line += f"  [WARNING: {warning}]"
        config = request.config
        config._acceptance_lines = getattr(config, "_acceptance_lines", []) + [line]
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit
