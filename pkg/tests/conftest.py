import numpy as np
import pytest

from acimlab.presets import example4, t1_only


@pytest.fixture(scope="session")
def ex4():
    return example4()


@pytest.fixture(scope="session")
def t1():
    return t1_only()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
