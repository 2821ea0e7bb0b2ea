import numpy as np
import pytest

from stratahjb import build_grid, builtin
from stratahjb.solver import CONTINUOUS, LSC, solve


@pytest.fixture(scope="session")
def example_e():
    return builtin("exampleE")


@pytest.fixture(scope="session")
def example_a():
    return builtin("exampleA")


@pytest.fixture(scope="session")
def example_b():
    return builtin("exampleB")


@pytest.fixture(scope="session")
def example_f():
    return builtin("exampleF")


@pytest.fixture(scope="session")
def eikonal():
    return builtin("ball-eikonal")


@pytest.fixture(scope="session")
def unit_cost():
    return builtin("unit-cost")


@pytest.fixture(scope="session")
def e_coarse(example_e):
    """Example E on 81 x 81 nodes, 100 steps."""
    grid = build_grid(example_e.strat, (-2.0, 2.0), 81, 100, horizon=1.0)
    return solve(example_e, grid, CONTINUOUS)


@pytest.fixture(scope="session")
def e_fine(example_e):
    """Example E on 161 x 161 nodes, 200 steps."""
    grid = build_grid(example_e.strat, (-2.0, 2.0), 161, 200, horizon=1.0)
    return solve(example_e, grid, CONTINUOUS)


@pytest.fixture(scope="session")
def f_lsc(example_f):
    grid = build_grid(example_f.strat, (-2.0, 2.0), 401, 200, horizon=1.0)
    return solve(example_f, grid, LSC)


@pytest.fixture(scope="session")
def b_lsc(example_b):
    grid = build_grid(example_b.strat, (-2.0, 2.0), 401, 200, horizon=1.0)
    return solve(example_b, grid, LSC)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
