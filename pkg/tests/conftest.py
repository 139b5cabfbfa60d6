import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_data_matrix(rng, n1, n2, scale=1.0):
    from nmfx import DataMatrix

    return DataMatrix(rng.uniform(0.0, scale, (n1, n2)))
