import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    """Store one acceptance outcome and print its line."""
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE[number] = line
    print(line)
    return passed


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
