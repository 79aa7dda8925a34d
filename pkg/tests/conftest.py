import numpy as np
import pytest

from splatlink.geometry import Intrinsics, Pose, look_rotation
from splatlink.scene import generate_synthetic_scene

UNIT_BOUNDS = (np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]))


def front_pose(standoff=2.5):
    """Camera on +z looking at the origin."""
    return Pose(look_rotation([0.0, 0.0, -1.0]), np.array([0.0, 0.0, standoff]))


def small_intrinsics(width=160, height=90, focal=120.0):
    return Intrinsics(focal, focal, width / 2.0, height / 2.0, width, height)


@pytest.fixture(scope="session")
def scene60():
    return generate_synthetic_scene(7, 60, UNIT_BOUNDS)


@pytest.fixture(scope="session")
def scene200():
    return generate_synthetic_scene(7, 200, UNIT_BOUNDS)


@pytest.fixture(scope="session")
def intr():
    return small_intrinsics()


# one pass/fail line per acceptance criterion, echoed after the pytest
# summary so they are visible in captured runs
ACCEPTANCE_LINES = []


def record_acceptance(num, ok, detail=""):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((num, line))
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
