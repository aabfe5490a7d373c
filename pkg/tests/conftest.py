import functools

import pytest
from hypothesis import settings

from hardphase.eos import HARD_PHASE
from hardphase.linear_operator import assemble_quadratic_form
from hardphase.spectrum import smallest_eigenpair
from hardphase.steady_state import StarConfig, solve_steady_state

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def star(kappa, n=4096):
    return solve_steady_state(HARD_PHASE, kappa, StarConfig(grid_size=n))


@functools.lru_cache(maxsize=None)
def assembly(kappa, n=4096):
    return assemble_quadratic_form(star(kappa, n))


@functools.lru_cache(maxsize=None)
def eigenpair(kappa, n=4096):
    return smallest_eigenpair(assembly(kappa, n))


@pytest.fixture(scope="session")
def get_star():
    return star


@pytest.fixture(scope="session")
def get_assembly():
    return assembly


@pytest.fixture(scope="session")
def get_eigenpair():
    return eigenpair
