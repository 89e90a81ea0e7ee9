import numpy as np
import pytest

from pyramidreg.geometry import SE3, RigidMotion, rot_axis_angle

ACCEPTANCE_LINES = []


def random_motion(rng, max_trans=20.0, dof=SE3):
    if dof == SE3:
        R = rot_axis_angle(rng.normal(size=3), rng.uniform(-np.pi, np.pi))
        return RigidMotion(R, rng.uniform(-max_trans, max_trans, size=3))
    return RigidMotion.planar(rng.uniform(-np.pi, np.pi), *rng.uniform(-max_trans, max_trans, size=2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
