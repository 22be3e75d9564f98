from pathlib import Path

import pytest

from warming_market.auction import Activity, AuctionConfig, Bid, CapSchedule, assemble_model
from warming_market.kernels import WarmingKernel

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"

DELTA_E = WarmingKernel("dE", "t", response=[1.0])
DELTA_S = WarmingKernel("dS", "t", response=[-1.0])
E = Activity("E", "Emission", "emission", "t", "dE")
S = Activity("S", "Sequestration", "sequestration", "t", "dS")


def tiny0(periods: int = 3):
    """One emission activity, B=10 and Q=5 per period, no finite caps."""
    config = AuctionConfig(1, 1, periods, periods, CapSchedule.unconstrained(periods))
    bids = [Bid("emitter", "E", u, 10.0, 5.0) for u in range(1, periods + 1)]
    return assemble_model(config, [E], {"dE": DELTA_E}, bids)


def tiny1(periods: int = 3):
    """Emission B=10 Q=10 against sequestration B=-4 Q=5, caps 0 in every period."""
    config = AuctionConfig(1, 1, periods, periods, CapSchedule.net_zero(1, periods))
    bids = [Bid("emitter", "E", u, 10.0, 10.0) for u in range(1, periods + 1)]
    bids += [Bid("sequesterer", "S", u, -4.0, 5.0) for u in range(1, periods + 1)]
    return assemble_model(config, [E, S], {"dE": DELTA_E, "dS": DELTA_S}, bids)


@pytest.fixture
def tiny0_model():
    return tiny0()


@pytest.fixture
def tiny1_model():
    return tiny1()


@pytest.fixture
def tiny1_path():
    return SCENARIOS / "tiny1.scenario"


@pytest.fixture(scope="session")
def desk():
    from warming_market.desk import desk_scenario

    return desk_scenario()


# Acceptance criteria register one line each here; printed in the terminal summary.
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
