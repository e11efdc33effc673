import os

import pytest
from hypothesis import settings

# the suite must not depend on the machine's core count
os.environ.setdefault("LOGLAW_WORKERS", "1")

settings.register_profile("loglaw", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("loglaw")


@pytest.fixture(scope="session")
def bolza():
    from loglaw.hyperbolic import FuchsianDomain

    return FuchsianDomain("bolza")


@pytest.fixture(scope="session")
def modular():
    from loglaw.hyperbolic import FuchsianDomain

    return FuchsianDomain("modular")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
