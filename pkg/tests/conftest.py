import numpy as np
import pytest
from hypothesis import settings

from abprune import Dataset, LayerWeights, Network, activation

# numba JIT warmup and brute-force property loops do not fit hypothesis's
# default per-example deadline; derandomize keeps the gate reproducible
settings.register_profile("abprune", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("abprune")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dataset(rng):
    x = rng.standard_normal((32, 3))
    y = rng.standard_normal(32)
    return Dataset(x, y)


def make_net(layer_matrices, kind="relu"):
    return Network([LayerWeights(np.asarray(m, dtype=float)) for m in layer_matrices], activation(kind))


@pytest.fixture
def relu_221():
    # 2-2-1 relu net used for hand-evaluated forward passes
    return make_net(
        [
            [[1.0, -1.0, 0.5], [0.5, 1.0, -1.0]],
            [[1.0, 2.0, 0.25]],
        ]
    )
