import pytest

from erasurecast.channel import ChannelParams
from erasurecast.bounds import DemandPair


@pytest.fixture
def running_params():
    return ChannelParams(0.1, 0.2, 0.02)


@pytest.fixture
def running_demands():
    return DemandPair(0.05, 0.1)
