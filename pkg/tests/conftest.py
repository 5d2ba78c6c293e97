"""Shared fixtures: the two grids most tests agree on.

The production grid is the wide velocity box used for oracle-level
comparisons (heavy tails need room); the verification grid is the small
box the time-stepping tests run on, where a full sweep stays in seconds.
Both equilibrium tables are session-scoped since builds are pure.
"""

import numpy as np
import pytest

from levyfp.equilibrium import build_equilibrium
from levyfp.grids import GridSpec


@pytest.fixture(scope="session")
def production_grid():
    return GridSpec(Lx=2.0 * np.pi, Nx=64, Lv=400.0, Nv=4096)


@pytest.fixture(scope="session")
def production_equilibrium(production_grid):
    return build_equilibrium(production_grid, 0.5)


@pytest.fixture(scope="session")
def verification_grid():
    return GridSpec(Lx=2.0 * np.pi, Nx=32, Lv=100.0, Nv=512)


@pytest.fixture(scope="session")
def verification_equilibrium(verification_grid):
    return build_equilibrium(verification_grid, 0.5)
