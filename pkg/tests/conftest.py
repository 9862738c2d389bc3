import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import settings  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

S3 = math.sqrt(3.0)


@pytest.fixture
def equilateral():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, S3 / 2]])


@pytest.fixture
def regular_tetrahedron():
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(8)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical or acceptance test")
