import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from eventkg.events import sessionize  # noqa: E402
from eventkg.factory import FactoryConfig, generate  # noqa: E402

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def default_world():
    return generate(FactoryConfig())


@pytest.fixture(scope="session")
def default_sequences(default_world):
    return sessionize(default_world.log)


@pytest.fixture(scope="session")
def small_world():
    cfg = FactoryConfig(lines=2, equipment_total=24, processes=8, materials=10, products=2,
                        events_total=60, log_length=4000, signals_total=40, seed=7)
    return generate(cfg)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")
