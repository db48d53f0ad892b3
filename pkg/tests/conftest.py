import numpy as np
import pytest

from resetff.lti import tf_to_ss
from resetff.sim import stage_plant

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def plant_tf():
    return stage_plant()


@pytest.fixture(scope="session")
def plant(plant_tf):
    return tf_to_ss(plant_tf)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0][1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
