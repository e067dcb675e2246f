import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plancomplete.graph import default_vocabulary  # noqa: E402


@pytest.fixture
def vocab():
    return default_vocabulary()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def plus_sign(size=21, width=1):
    bits = np.zeros((size, size), dtype=bool)
    c = size // 2
    lo, hi = c - width // 2, c + width // 2 + 1
    bits[lo:hi, 2 : size - 2] = True
    bits[2 : size - 2, lo:hi] = True
    return bits


def bar(length=20, thickness=5, pad=2):
    bits = np.zeros((thickness + 2 * pad, length + 2 * pad), dtype=bool)
    bits[pad : pad + thickness, pad : pad + length] = True
    return bits
