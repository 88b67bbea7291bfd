from pathlib import Path

import numpy as np
import pytest

from gaitpipe.model import Joint, Point3, PoseSequence, SkeletonFrame
from gaitpipe.synth import GaitScenario, generate

DATA = Path(__file__).parent / "data"


def feet_sequence(left, right, fps=30.0, head=True, source_id="test"):
    """PoseSequence from (T, 3) foot arrays, head 1.7 m above the feet midpoint."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    names = ["LeftFoot", "RightFoot"]
    arrays = [left, right]
    if head:
        h = 0.5 * (left + right)
        h[:, 2] = 1.7
        names.append("Head")
        arrays.append(h)
    return PoseSequence.from_arrays(names, np.stack(arrays, axis=1), frame_rate_hz=fps,
                                    source_id=source_id)


def frame(idx, joints, fps=30.0):
    return SkeletonFrame(idx, idx / fps, [Joint(k, Point3(*p)) for k, p in joints.items()])


@pytest.fixture
def walk():
    return generate(GaitScenario())


@pytest.fixture
def data_dir():
    return DATA
