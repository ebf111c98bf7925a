import numpy as np
import pytest

from binpick.camgeom import CameraModel

_acceptance = []


@pytest.fixture
def unit_camera():
    """fx = depth = 1, so gripper limits in meters equal pixels exactly."""
    return CameraModel(fx=1.0, fy=1.0, cx=0.0, cy=0.0, nominal_depth=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = dict(report.keywords).get("acceptance")
    if marker is None:
        return
    _acceptance.append((report.nodeid, report.outcome, report.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome, props in _acceptance:
        info = dict(props)
        status = "PASS" if outcome == "passed" else "FAIL"
        detail = f"  ({info['detail']})" if "detail" in info else ""
        terminalreporter.write_line(f"[{status}] criterion {info.get('criterion', '?')}: {info.get('title', nodeid)}{detail}")
