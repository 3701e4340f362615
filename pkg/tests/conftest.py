import numpy as np
import pytest

from kzopen import BathParams, kitaev


@pytest.fixture(scope="session")
def kit():
    return kitaev()


@pytest.fixture(scope="session")
def ohmic():
    return BathParams(gamma=0.05, delta=1.0, s=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
