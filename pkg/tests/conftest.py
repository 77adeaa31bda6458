import pytest

from prflow import basic_example, cat_suspension, horseshoe_suspension


@pytest.fixture(scope="session")
def basic():
    return basic_example()


@pytest.fixture(scope="session")
def cat():
    return cat_suspension()


@pytest.fixture(scope="session")
def horseshoe():
    return horseshoe_suspension(3.0, 0.25)
