import pytest

from melstream import toy_unet_spec


@pytest.fixture(scope="session")
def tiny_spec():
    return toy_unet_spec((4, 8), 1, k_t=2, dilations=(1, 2))
