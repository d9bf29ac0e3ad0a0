import numpy as np
import pytest

from hetcov.network_model import NetworkConfig, TierParams, two_tier_config

# criterion lines collected by the acceptance suite, echoed in the summary
REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)


@pytest.fixture
def two_tier():
    """Two tiers, 6x denser small cells, -20 dB UL and DL weights."""
    return two_tier_config(6, -20)


@pytest.fixture
def equal_weights_a4():
    return two_tier_config(6, 0, 0, pcf=1.0, alpha=4.0)


@pytest.fixture
def single_tier():
    return NetworkConfig(tiers=(TierParams.from_db(5.0, 46.0),), alpha=4.0, pcf=1.0)


def three_tier_config(**kw) -> NetworkConfig:
    tiers = (
        TierParams.from_db(5.0, 46.0, 0.0, 0.0),
        TierParams.from_db(20.0, 30.0, 0.0, 0.0),
        TierParams.from_db(35.0, 20.0, 0.0, 0.0),
    )
    return NetworkConfig(tiers=tiers, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
