import pytest

from galimech.catalog import load_model


@pytest.fixture(scope="session")
def free2d():
    return load_model("free2d")


@pytest.fixture(scope="session")
def free3d():
    return load_model("free3d")


@pytest.fixture(scope="session")
def cyclotron():
    return load_model("cyclotron")


@pytest.fixture(scope="session")
def rigidbody():
    return load_model("rigidbody")


@pytest.fixture(scope="session")
def catalog_models(free2d, free3d, cyclotron, rigidbody):
    return [free2d, free3d, cyclotron, rigidbody]
