import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from planarot import DiscreteMeasure

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def uniform_pair(X, Y):
    return DiscreteMeasure.uniform(np.asarray(X, float)), DiscreteMeasure.uniform(np.asarray(Y, float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
