import numpy as np
import pytest

TWO_PI = 2 * np.pi
MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
