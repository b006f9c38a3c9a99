"""Pytest fixtures for testing."""

import numpy as np
import pytest

from floquet_readout.config import parse_config
from floquet_readout.hamiltonian import DriveParams
from floquet_readout.liouville import RateMatrices
from floquet_readout.readout import assemble_system


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(20240613)


@pytest.fixture
def sim_drive():
    """Read-out drive of the paper-sim preset (Delta2 unresolved)."""
    return DriveParams(B_x=0.1, g_ex=0.24, g_hx=0.47, Omega1p=200.0, Delta1=2000.0,
                       Omega2p=0.5, Omega2m=0.5)


@pytest.fixture
def branching_drive(sim_drive):
    """Same drive with the g-factor pair used for the branching-ratio curve."""
    return sim_drive.replace(g_ex=0.47, g_hx=0.24)


@pytest.fixture
def sim_rates():
    """Rate preset of the read-out simulation."""
    return RateMatrices.preset("paper-sim")


@pytest.fixture
def sim_system(sim_drive, sim_rates):
    """Assembled Hamiltonians, Liouville blocks and initial states for target z-."""
    return assemble_system(sim_drive, sim_rates, "z-")


@pytest.fixture
def run_config():
    """RunConfig of the bare paper-sim preset."""
    return parse_config()


@pytest.fixture
def random_density(rng):
    """Factory of random full-rank 4x4 density matrices."""
    def make():
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        return rho / np.trace(rho).real
    return make
