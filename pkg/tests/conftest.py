import numpy as np
import pytest

from topochain.dynamics import IntegratorConfig, PotentialSpec


@pytest.fixture
def pot():
    return PotentialSpec()


@pytest.fixture
def cfg():
    return IntegratorConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(7)
