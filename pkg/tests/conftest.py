import numpy as np
import pytest

from diffnet.model import Network, example_network
from diffnet.verify import RandomNetConfig, random_network


@pytest.fixture(scope="session")
def example():
    return example_network()


def make_random(seed, n_range=(4, 8), stochastic=False, strong=True):
    rng = np.random.default_rng(seed)
    cfg = RandomNetConfig(n_range=n_range, seed=seed, stochastic_mode=stochastic,
                          require_strong_connectivity=strong)
    return random_network(rng, cfg)


@pytest.fixture
def chain3():
    # 1 -> 2 -> 3 with weights 0.5
    return Network.from_matrix([[0, 0, 0], [0.5, 0, 0], [0, 0.5, 0]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for name in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[name])
