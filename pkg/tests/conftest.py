from fractions import Fraction

import pytest

from rawcoding.coding import binary_partition, bridge_partition
from rawcoding.dynamics import make_bridge_map, make_doubling, make_rotation


@pytest.fixture(scope="session")
def doubling():
    return make_doubling()


@pytest.fixture(scope="session")
def bridge():
    return make_bridge_map()


@pytest.fixture(scope="session")
def rotation():
    return make_rotation()


@pytest.fixture(scope="session")
def binary():
    return binary_partition()


@pytest.fixture
def half():
    return Fraction(1, 2)


@pytest.fixture(scope="session")
def doubling_pair_stats():
    """Acceptance experiment 1: doubling map, binary partition, N=2, L=4."""
    from rawcoding.coincidence import CoincidenceQuery, hitting_experiment

    query = CoincidenceQuery(N=2, L=4, horizon=10_000, system="doubling", partition=binary_partition(),
                             seed=7, samples=100_000)
    return hitting_experiment(query)
