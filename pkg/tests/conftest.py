import numpy as np
import pytest

from flatgrav import casimir as cm
from flatgrav import steady as st


@pytest.fixture(scope="session")
def default_phi():
    return cm.polytrope(1.0, 3.0)


@pytest.fixture(scope="session")
def default_psi(default_phi):
    return cm.reduce_phi_to_psi(default_phi)


@pytest.fixture(scope="session")
def default_state(default_phi, default_psi):
    """The unit-mass reference equilibrium, solved once per session."""
    return st.solve_reduced(default_psi, 1.0, phi=default_phi)


@pytest.fixture(scope="session")
def default_lifted(default_state):
    return st.lift(default_state)
