import pytest

from envsim.world import ManipulatorPose, ObjectState, WorldState, Zone


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run hour-scale experiments"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_state(
    manipulator=(0.5, 0.8),
    closed=False,
    held=None,
    red=(0.3, 0.5),
    green=(0.7, 0.5),
    zone_center=(0.5, 0.2),
    domain="target",
    red_origin=None,
):
    """Two objects (red block, green ball), one zone, the manipulator below them."""
    return WorldState(
        manipulator=ManipulatorPose(position=manipulator, closed=closed, held=held),
        objects=(
            ObjectState("red_block", "block", "red", red, red_origin or red),
            ObjectState("green_ball", "ball", "green", green, green),
        ),
        zones=(Zone.around("zone_1", zone_center),),
        domain_tag=domain,
    )


@pytest.fixture
def world_state():
    """Target-domain state with the manipulator well clear of both objects."""
    return make_state()


@pytest.fixture
def source_state():
    """The same layout drawn in the source domain."""
    return make_state(domain="source")


@pytest.fixture
def state_factory():
    """Builder for hand-placed layouts; keyword arguments as in make_state."""
    return make_state
