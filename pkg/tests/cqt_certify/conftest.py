import pytest

from cqt_certify.config import SweepConfig
from cqt_certify.states import Channel
from cqt_certify.teleport import FidelityReport, ecp_report


@pytest.fixture(scope="session")
def grid_reports() -> dict[Channel, list[FidelityReport]]:
    """ecp_report at every point of the default sweep grid, for both channels."""
    grid = SweepConfig().grid()
    return {channel: [ecp_report(channel, p) for p in grid] for channel in Channel}
