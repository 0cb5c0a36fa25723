import pytest

from isospec import RngStream


@pytest.fixture
def stream():
    return RngStream(20240601)
