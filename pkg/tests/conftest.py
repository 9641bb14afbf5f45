import numpy as np
import pytest

from trpgates import reference
from trpgates.propagator import propagate_unitary


@pytest.fixture(scope="session")
def hadamard_run():
    """U_a and integration stats at the Hadamard best point (computed once)."""
    params = reference.BEST_POINTS["H"]
    u, stats = propagate_unitary(params)
    return params, u, stats


@pytest.fixture(scope="session")
def vcp_run():
    params = reference.BEST_POINTS["V_CP"]
    u, stats = propagate_unitary(params)
    return params, u, stats


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
