import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oodbench.netengine import init_params, mlp_spec

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_small_net(rng, in_dim=None, n_classes=None):
    """A random dense/relu network with 1 or 2 hidden layers."""
    in_dim = in_dim or int(rng.integers(2, 8))
    n_classes = n_classes or int(rng.integers(2, 6))
    depth = int(rng.integers(0, 3))
    hidden = [int(rng.integers(3, 10)) for _ in range(depth)]
    spec = mlp_spec(in_dim, hidden, n_classes, seed=int(rng.integers(0, 2**31)))
    return init_params(spec)
