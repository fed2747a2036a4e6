import numpy as np
import pytest

from qkrylov.blockops import BlockOperator


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_block_system(n1, n2, seed, shift=0.0):
    """Random dense block operator plus a matching right-hand side."""
    rng = np.random.default_rng(seed)
    n = n1 + n2
    M = random_complex(rng, n, n) / np.sqrt(n) + shift * np.eye(n)
    b = random_complex(rng, n)
    return BlockOperator.from_matrix(M, n1), M, b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
