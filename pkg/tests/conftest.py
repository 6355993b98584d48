import numpy as np
import pytest

from rescloak.residual import default_bump_field
from rescloak.tensors import IsotropicModuli


@pytest.fixture(scope="session")
def unit_moduli():
    return IsotropicModuli(1.0, 1.0)


@pytest.fixture(scope="session")
def bump_field():
    return default_bump_field()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
