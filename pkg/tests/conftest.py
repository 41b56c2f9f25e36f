import pytest

from tmapf.scenario import canonical_instances


@pytest.fixture(scope="session")
def toys():
    return canonical_instances()


@pytest.fixture
def toy1(toys):
    return toys["toy1"].problem


@pytest.fixture
def toy4(toys):
    return toys["toy4"].problem
