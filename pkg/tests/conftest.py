import numpy as np
import pytest

from l2verify.network import Network

B3_WEIGHTS = [
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[-1.0, 1.0], [1.0, -1.0]]),
    np.array([[-1.0, -1.0]]),
]
B3_CENTER = np.array([1.0, 1.0])
B3_RADIUS = 1.0


def b3_network():
    return Network.from_weights(B3_WEIGHTS)


def random_network(rng, dims, bias_scale=0.3):
    weights = [rng.normal(size=(o, i)) / np.sqrt(i) for i, o in zip(dims[:-1], dims[1:])]
    biases = [bias_scale * rng.normal(size=o) for o in dims[1:]]
    return Network.from_weights(weights, biases)


@pytest.fixture
def b3():
    return b3_network()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
