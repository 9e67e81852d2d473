import pytest

from crtraffic.sensing import ChannelModel
from crtraffic.throughput import SnrConstraint
from crtraffic.traffic import SystemGeometry, TrafficModel


@pytest.fixture
def geom():
    """T_samp = 0.1 ms, T_s = 5 ms, T_F = 25 ms."""
    return SystemGeometry(t_samp=1e-4, t_sense=5e-3, t_frame=25e-3)


@pytest.fixture
def traffic():
    return TrafficModel(alpha=1.0, beta=1.0)


@pytest.fixture
def channel():
    return ChannelModel.from_snr_db(primary_snr_db=5.0, secondary_snr_db=20.0)


@pytest.fixture
def constraint():
    return SnrConstraint.from_db(5.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
