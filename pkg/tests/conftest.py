"""
Shared kernels for the ustat_lil tests.

Read more about conftest.py under:
- https://docs.pytest.org/en/stable/fixture.html
"""

import numpy as np
import pytest

from ustat_lil.kernel import Kernel
from ustat_lil.rng import stream


@pytest.fixture
def coin():
    """Fair +-1 kernel of order 1."""
    return Kernel.from_function(lambda x: [-1.0, 1.0][x], 1, [0.5, 0.5])


@pytest.fixture
def sign2():
    """``(-1)^(x+y)`` under the uniform law on {0, 1}."""
    return Kernel.from_function(lambda x, y: (-1.0) ** (x + y), 2, [0.5, 0.5], symmetric=True)


@pytest.fixture
def skewed():
    """Centered order-1 kernel with values -1, 3 and probabilities 3/4, 1/4."""
    return Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])


@pytest.fixture
def gen():
    return stream(12345, 0)


@pytest.fixture
def uniform3():
    return np.full(3, 1.0 / 3.0)
