"""Shared fixtures.

The 2x2 hand instance has data W = [[1, 1], [0, 1]], unit weights and the
euclidean inner product.  Its correlation matrix [[2, 1], [1, 1]] has
eigenvalues (3 +- sqrt(5))/2, energy 3, and the rank-1 truncation error
(3 - sqrt(5))/2.  All hand values below come from that 2x2 eigenproblem.

Trajectory-driven instances are solved once per session; everything that
needs them (consistency tests and the acceptance battery) shares the cache.
"""

import numpy as np
import pytest

from podkit.fhn_gen import FhnConfig, make_fhn_instance
from podkit.gram_space import identity_space
from podkit.snapshot_io import make_snapshot_set

GOLDEN_LAMBDA_1 = (3.0 + np.sqrt(5.0)) / 2.0
GOLDEN_LAMBDA_2 = (3.0 - np.sqrt(5.0)) / 2.0


@pytest.fixture
def golden_instance():
    data = np.array([[1.0, 1.0], [0.0, 1.0]])
    weights = np.array([1.0, 1.0])
    space = identity_space(2)
    return make_snapshot_set(data, weights, space=space)


@pytest.fixture(scope="session")
def fhn_instance():
    return make_fhn_instance(FhnConfig())


@pytest.fixture(scope="session")
def fhn_small_instance():
    # Six nodes: the trajectory fills the whole 12-dimensional state space
    # above the drop threshold, so numerical and exact ranks coincide and
    # the rank relation can be asserted strictly.
    return make_fhn_instance(FhnConfig(nodes=6))
