import math

import numpy as np
import pytest
from hypothesis import settings

from cold.geometry import Pose2
from cold.road import Arc, RoadSpec, Straight, build_road
from cold.sensor import sense

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

CURVE_RADIUS = 2 * 20 / math.pi  # the 90 degree arc is 20 m long


@pytest.fixture(scope="session")
def straight_road():
    return build_road(RoadSpec([Straight(300.0)]))


@pytest.fixture(scope="session")
def curve_road():
    return build_road(RoadSpec([Straight(40.0), Arc(12.73, 90.0, "right"), Straight(40.0)]))


@pytest.fixture(scope="session")
def rural_spec():
    return RoadSpec([Straight(40.0), Arc(12.73, 90.0, "right"), Straight(30.0),
                     Arc(20.0, 45.0, "left"), Straight(40.0)])


def detect_pair(road, ego_s, coop_s, **kw):
    ego = sense(road.pose_at(ego_s), road, frame=0, vehicle_id=0, **kw)
    coop = sense(road.pose_at(coop_s), road, frame=0, vehicle_id=1, **kw)
    return ego, coop


def dist_to_arc(points, centre, radius):
    pts = np.atleast_2d(points)
    return np.abs(np.hypot(*(pts - centre).T) - radius)


ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    criterion = item.get_closest_marker("criterion")
    if criterion is not None and call.when == "call":
        num, title = criterion.args
        ok = call.excinfo is None
        ACCEPTANCE[num] = (ok and ACCEPTANCE.get(num, (True,))[0], title)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, title = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num}: {title}")
