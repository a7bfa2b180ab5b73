import numpy as np
import pytest
from hypothesis import settings

from mhdpim.forms import OperatorCache, PhysicalParams
from mhdpim.mesh import build_rect_mesh
from mhdpim.spaces import build_spaces

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def unit_space():
    """P2-P1 spaces on a 6 x 5 mesh of the unit square."""
    return build_spaces(build_rect_mesh((0.0, 1.0, 0.0, 1.0), 6, 5))


@pytest.fixture(scope="session")
def unit_ops(unit_space):
    return OperatorCache(unit_space)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def params():
    return PhysicalParams(0.02, 0.01)
