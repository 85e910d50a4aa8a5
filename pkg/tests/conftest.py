import os

import pytest


@pytest.fixture(autouse=True)
def _no_cap_env(monkeypatch):
    # tests that exercise the cap variable set it themselves
    monkeypatch.delenv("BCSIDELAB_CAP", raising=False)


@pytest.fixture
def scenario_dir():
    return os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "scenarios")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
