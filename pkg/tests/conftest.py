import numpy as np
import pytest

from eosim import params

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def high_coop():
    return params.high_coop_system()


@pytest.fixture(scope="session")
def low_coop():
    return params.low_coop_system()


@pytest.fixture(scope="session")
def sys22(high_coop):
    """High-cooperativity device at the on-resonance suppression 0.22."""
    return params.with_suppression(high_coop, 0.22)
