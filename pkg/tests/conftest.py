import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from abq.envs import RandomMdpSpec, make_task, random_mdp

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def two_state_task():
    return make_task("two_state")


@pytest.fixture(scope="session")
def small_mdp():
    """A 5-state, 2-action, 3-feature random instance."""
    return random_mdp(RandomMdpSpec(5, 2, 3, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        RESULTS = module.RESULTS
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
