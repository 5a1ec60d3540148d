import functools

import pytest

from fsigevrey.assembly import apply_constraints
from fsigevrey.mesh import build_plate_mesh, build_unit_square_mesh


@functools.lru_cache(maxsize=None)
def reduced_system(n, plate_elements=None):
    return apply_constraints(build_unit_square_mesh(n), build_plate_mesh(plate_elements or n))


@pytest.fixture(scope="session")
def system2():
    return reduced_system(2)


@pytest.fixture(scope="session")
def system4():
    return reduced_system(4)


@pytest.fixture(scope="session")
def system8():
    return reduced_system(8)
