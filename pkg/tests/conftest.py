# tests/conftest.py
import os
import sys

import numpy as np
import pytest

# Same path setup as main.py
root_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src_dir = os.path.join(root_dir, "src")
for path in (src_dir, root_dir):
    if path not in sys.path:
        sys.path.insert(0, path)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_spd(rng, dim, low=1.0, high=10.0):
    """SPD matrix with eigenvalues spread evenly over [low, high]."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigenvalues = np.linspace(high, low, dim)
    sigma = (q * eigenvalues) @ q.T
    return 0.5 * (sigma + sigma.T)


@pytest.fixture
def spd():
    return random_spd
