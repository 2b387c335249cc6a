import numpy as np
import pytest

from gkp_forge import reference as ref
from gkp_forge.algebra import CodewordSpec


@pytest.fixture(scope="session")
def table_code():
    return ref.complex_optimum()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_code(rng, u, M, r):
    c = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
    return CodewordSpec(u, M, r, c)
