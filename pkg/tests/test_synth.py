import json

import numpy as np
import pytest

from gaitpipe.detection import feet_distance
from gaitpipe.errors import ScenarioInvalid
from gaitpipe.ingestion import KINECT_JOINTS, parse_kinect_skeleton_file, serialize_kinect_skeleton
from gaitpipe.metrics import Foot
from gaitpipe.synth import GaitScenario, SyntheticGroundTruth, generate, scenario_grid, stick_figure


def test_default_walk_ground_truth():
    seq, truth = generate(GaitScenario(step_length_m=0.35, cadence_hz=2.0, duration_s=5.0))
    assert len(truth.step_frames) == 10
    assert truth.true_speed_mps == pytest.approx(0.7, abs=1e-12)
    assert truth.true_step_length_m == pytest.approx(0.7)
    assert truth.true_swing_time_s == pytest.approx(0.5)
    assert truth.swing_foot[:3] == (Foot.RIGHT, Foot.LEFT, Foot.RIGHT)
    assert seq.frame_rate_hz == 30.0


def test_asymmetric_truth_index():
    _, truth = generate(GaitScenario(step_length_m=(0.40, 0.34)))
    assert round(truth.true_asymmetry_index, 4) == 0.1622
    assert round(abs(0.40 - 0.34) / 0.37, 4) == 0.1622


def test_same_seed_bitwise_identical():
    sc = GaitScenario(step_length_m=0.5, noise_sigma_m=0.02, dropout_prob=0.1, seed=42)
    a, ta = generate(sc)
    b, tb = generate(sc)
    assert a == b and ta == tb
    np.testing.assert_array_equal(a.to_array(["LeftFoot", "RightFoot", "Head"]),
                                  b.to_array(["LeftFoot", "RightFoot", "Head"]))
    c, _ = generate(GaitScenario(step_length_m=0.5, noise_sigma_m=0.02, dropout_prob=0.1, seed=43))
    assert c != a


def test_signal_periodic_with_cadence():
    sc = GaitScenario(step_length_m=0.4, cadence_hz=1.5, duration_s=8)
    seq, truth = generate(sc)
    period = sc.frame_rate_hz / sc.cadence_hz
    gaps = np.diff(truth.step_frames)
    assert np.all(np.abs(gaps - period) <= 1)
    arr = seq.to_array(["LeftFoot", "RightFoot"])
    d = feet_distance(arr[:, 0], arr[:, 1])
    lo, hi = truth.step_frames[0], truth.step_frames[-2]
    p = int(round(period))
    assert np.max(np.abs(d[lo:hi - p] - d[lo + p:hi])) < 0.1 * d.max()


def test_heading_leaves_truth_unchanged():
    base = generate(GaitScenario(step_length_m=0.45))[1]
    for heading in (30.0, 123.0, 270.0):
        assert generate(GaitScenario(step_length_m=0.45, heading_deg=heading))[1] == base


def test_dropout_marks_missing():
    seq, _ = generate(GaitScenario(step_length_m=0.4, dropout_prob=0.2, seed=1))
    n_missing = sum(3 - len(f.joints) for f in seq)
    assert 0.1 < n_missing / (3 * len(seq)) < 0.3


@pytest.mark.parametrize("bad", [
    {"cadence_hz": 0.0}, {"dropout_prob": 1.0}, {"noise_sigma_m": -0.1},
    {"step_length_m": -0.2}, {"frame_rate_hz": 4.0}, {"duration_s": 0.1},
    {"first_swing": "both"},
])
def test_invalid_scenarios(bad):
    with pytest.raises(ScenarioInvalid):
        GaitScenario(**bad)


def test_scenario_and_truth_dict_round_trip():
    sc = GaitScenario(step_length_m=(0.4, 0.3), seed=3, name="x")
    assert GaitScenario.from_dict(json.loads(json.dumps(sc.to_dict()))) == sc
    _, truth = generate(sc)
    assert SyntheticGroundTruth.from_dict(json.loads(json.dumps(truth.to_dict()))) == truth
    with pytest.raises(ScenarioInvalid):
        GaitScenario.from_dict({"speed": 1})


def test_grid_spans_requested_ranges():
    grid = scenario_grid(50, seed=0)
    assert len(grid) == 50 and len({g.seed for g in grid}) == 50
    assert all(0.05 <= g.step_length_m <= 0.8 for g in grid)
    assert all(0.8 <= g.cadence_hz <= 3.0 for g in grid)
    assert all(3.0 <= g.duration_s <= 15.0 for g in grid)
    assert scenario_grid(50, seed=0) == grid


def test_stick_figure_kinect_round_trip():
    sc = GaitScenario(step_length_m=0.4, heading_deg=60.0)
    seq, _ = generate(sc)
    full = stick_figure(seq, sc.heading_deg)
    assert full.joint_kinds() == set(KINECT_JOINTS)
    back = parse_kinect_skeleton_file(serialize_kinect_skeleton(full).encode())
    np.testing.assert_array_equal(back.to_array(["LeftFoot", "RightFoot"]),
                                  seq.to_array(["LeftFoot", "RightFoot"]))
    with pytest.raises(ScenarioInvalid):
        stick_figure(generate(GaitScenario(dropout_prob=0.3, seed=1))[0])
