import pytest

from nngen.registry import Registry


@pytest.fixture
def registry():
    with Registry(":memory:") as reg:
        yield reg
