import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)


def random_instance(rng, n_max=12, p_max=4):
    """A small dataset plus query row with occasional degenerate columns."""
    n = int(rng.integers(4, n_max + 1))
    p = int(rng.integers(1, p_max + 1))
    x = rng.normal(size=(n - 1, p))
    beta = rng.normal(size=p) * rng.choice([0.0, 1.0], size=p, p=[0.3, 0.7])
    y = x @ beta + 0.5 * rng.normal(size=n - 1)
    x_new = rng.normal(size=p)
    return x, y, x_new
