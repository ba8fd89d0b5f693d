import numpy as np
import pytest

from qcompile.gatesets import GATE_SET_NAMES, build


@pytest.fixture(scope="session")
def gate_sets():
    return {name: build(name) for name in GATE_SET_NAMES}


@pytest.fixture(scope="session")
def clifford(gate_sets):
    return gate_sets["clifford_t"]


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_unitary_pair(rng, dim):
    from qcompile.linalg import random_haar

    return random_haar(dim, rng), random_haar(dim, rng)
