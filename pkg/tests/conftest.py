import numpy as np
import pytest

from axaging.bench import generate_benchmark, rca
from axaging.timing import default_timing_model


@pytest.fixture(scope="session")
def model():
    return default_timing_model()


@pytest.fixture(scope="session")
def rca8():
    return generate_benchmark(rca(8))


@pytest.fixture()
def rng():
    return np.random.default_rng(20210816)
