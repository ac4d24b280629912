import pytest

from mgw.reference import (
    alternating_geometric,
    finite_table_critical,
    heavy_alternating,
    monotype_geometric,
)


@pytest.fixture(scope="session")
def alt():
    return alternating_geometric()


@pytest.fixture(scope="session")
def mono():
    return monotype_geometric()


@pytest.fixture(scope="session")
def table():
    return finite_table_critical()


@pytest.fixture(scope="session")
def heavy():
    return heavy_alternating()
