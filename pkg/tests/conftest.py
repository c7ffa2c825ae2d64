import pytest

from helpers import bridged_triangles, full_subgraph


@pytest.fixture
def triangles_kg():
    return bridged_triangles()


@pytest.fixture
def triangles_g(triangles_kg):
    return full_subgraph(triangles_kg)
