import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # expose oracles.py

from csng.curves import dataset_from_lines, decompose  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_random_lines(n_lines, n_vertices, seed, box=10.0, step=0.35):
    rng = np.random.default_rng(seed)
    raw = []
    for _ in range(n_lines):
        p = rng.random(3) * box
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        verts = [p]
        for _ in range(n_vertices - 1):
            d = d + 0.4 * rng.normal(size=3)
            d /= np.linalg.norm(d)
            p = p + step * d
            verts.append(p)
        raw.append((np.array(verts), None))
    return raw


@pytest.fixture
def small_dataset():
    return decompose(dataset_from_lines(make_random_lines(40, 11, seed=11)), 2)
