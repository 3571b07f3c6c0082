import os

import numpy as np
import pytest

from skewblend import lambda_0, lambda_hat

PINS = os.path.join(os.path.dirname(__file__), "pins.json")


@pytest.fixture(scope="session")
def lam0():
    return lambda_0()


@pytest.fixture(scope="session")
def hat1():
    return lambda_hat(0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pin_store():
    return PINS


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS, key=lambda k: (isinstance(k, str), str(k).zfill(3))):
            terminalreporter.write_line(RESULTS[k])
