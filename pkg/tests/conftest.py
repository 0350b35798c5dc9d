import pytest

from fusionkz.rootdata import build_root_datum


@pytest.fixture(scope="session")
def a1():
    return build_root_datum("A", 1)


@pytest.fixture(scope="session")
def a2():
    return build_root_datum("A", 2)
