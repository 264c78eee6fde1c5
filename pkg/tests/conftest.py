import itertools

import numpy as np
import pytest

from qttinterp.tt import TensorTrain


def all_bits(K):
    return np.array(list(itertools.product((0, 1), repeat=K)), dtype=np.int64)


def dyadic_grid(K):
    return np.arange(2 ** K) / 2.0 ** K


def random_tt(rng, ranks, dims=None):
    K = len(ranks) - 1
    dims = dims or (2,) * K
    return TensorTrain(tuple(rng.standard_normal((dims[k], ranks[k], ranks[k + 1])) for k in range(K)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
