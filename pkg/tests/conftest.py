import numpy as np
import pytest

from mvtrack.geometry import CameraModel

FOCAL = 1000.0
PRINCIPAL = (960.0, 540.0)


def intrinsics(focal=FOCAL, principal=PRINCIPAL):
    return np.array([
        [focal, 0.0, principal[0]],
        [0.0, focal, principal[1]],
        [0.0, 0.0, 1.0],
    ])


def look_at_camera(cam_id, center, aim, focal=FOCAL, principal=PRINCIPAL):
    """Camera at `center` aimed at `aim`, image x right, image y down."""
    center = np.asarray(center, dtype=float)
    forward = np.asarray(aim, dtype=float) - center
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return CameraModel(id=cam_id, K=intrinsics(focal, principal), R=R,
                       t=-R @ center)


@pytest.fixture
def cam_a():
    return CameraModel(id=0, K=intrinsics(), R=np.eye(3), t=np.zeros(3))


@pytest.fixture
def cam_b():
    return CameraModel(id=1, K=intrinsics(), R=np.eye(3),
                       t=np.array([-1.0, 0.0, 0.0]))
