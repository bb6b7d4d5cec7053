import numpy as np
import pytest

from htype_xray.algebra import HTypeStructure


@pytest.fixture(scope="session")
def h1():
    return HTypeStructure.heisenberg(1)


@pytest.fixture(scope="session")
def h2():
    return HTypeStructure.heisenberg(2)


@pytest.fixture(scope="session")
def quat():
    return HTypeStructure.quaternionic()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)
