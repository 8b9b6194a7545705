import numpy as np
import pytest

from plateau_h3.curves import equator, wavy
from plateau_h3.disk import DiskGrid
from plateau_h3.plateau import PlateauProblem, solve_plateau


@pytest.fixture(scope="session")
def grid():
    return DiskGrid(48, 12)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def equator_problem(grid):
    return PlateauProblem(equator(), grid)


@pytest.fixture(scope="session")
def equator_record(equator_problem):
    return solve_plateau(equator_problem)


@pytest.fixture(scope="session")
def wavy_problem():
    return PlateauProblem(wavy(0.3, 3), DiskGrid(48, 12))


@pytest.fixture(scope="session")
def wavy_record(wavy_problem):
    return solve_plateau(wavy_problem)
