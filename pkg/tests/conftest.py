import numpy as np
import pytest

import macrobell as mb


@pytest.fixture(scope="session")
def pair_state():
    return mb.pair_coherent(1.1)


@pytest.fixture(scope="session")
def default_grid():
    return mb.DEFAULT_GRID


@pytest.fixture(scope="session")
def canonical_angles():
    return mb.DEFAULT_ANGLES


def total_variation(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
