"""Synthetic walking clips with exact ground truth.

The walker starts mid-stride (feet staggered, rear foot about to swing),
takes ``duration_s * cadence_hz`` steps, then brings the rear foot alongside
and stands still. Each swing follows a smoothstep profile, so the feet
distance has clean strict maxima exactly at the frame each swing ends.

World frame: x forward at heading 0, y to the walker's left, z up.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Tuple, Union

import numpy as np

from .errors import ScenarioInvalid
from .metrics import Foot, asymmetry_index
from .model import JointKind, PoseSequence

JOINT_NAMES = (JointKind.LEFT_FOOT, JointKind.RIGHT_FOOT, JointKind.HEAD)
SWING_CLEARANCE_M = 0.05


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class GaitScenario:
    """Parameters of one synthetic clip.

    ``step_length_m`` is the forward advance per step; pass a ``(left, right)``
    pair for an asymmetric gait. ``duration_s`` is the walking time; the clip
    also contains a closing half step and a short standstill.
    """

    step_length_m: Union[float, Tuple[float, float]] = 0.35
    cadence_hz: float = 2.0
    duration_s: float = 5.0
    stance_width_m: float = 0.0
    noise_sigma_m: float = 0.0
    dropout_prob: float = 0.0
    heading_deg: float = 0.0
    frame_rate_hz: float = 30.0
    seed: int = 0
    first_swing: str = "right"
    start_time_s: float = 0.0
    height_m: float = 1.7
    name: str = "synthetic"

    def __post_init__(self):
        sl = self.step_length_m
        if isinstance(sl, (list, tuple)):
            if len(sl) != 2:
                raise ScenarioInvalid("step_length_m pair must be (left, right)")
            object.__setattr__(self, "step_length_m", (float(sl[0]), float(sl[1])))
        for name in ("stance_width_m", "noise_sigma_m", "duration_s", "height_m"):
            if not getattr(self, name) >= 0:
                raise ScenarioInvalid(f"{name} must be >= 0")
        if min(self.step_lengths) < 0:
            raise ScenarioInvalid("step lengths must be >= 0")
        if not self.cadence_hz > 0 or not self.frame_rate_hz > 0:
            raise ScenarioInvalid("cadence_hz and frame_rate_hz must be positive")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ScenarioInvalid("dropout_prob must lie in [0, 1)")
        if self.first_swing not in ("left", "right"):
            raise ScenarioInvalid("first_swing must be 'left' or 'right'")
        if self.frame_rate_hz / self.cadence_hz < 4:
            raise ScenarioInvalid("need at least 4 frames per step")
        if self.n_steps < 1:
            raise ScenarioInvalid("duration too short for a single step")

    @property
    def step_lengths(self) -> Tuple[float, float]:
        sl = self.step_length_m
        return sl if isinstance(sl, tuple) else (float(sl), float(sl))

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration_s * self.cadence_hz + 1e-9))

    @classmethod
    def from_dict(cls, d: dict) -> "GaitScenario":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ScenarioInvalid(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["step_length_m"], tuple):
            d["step_length_m"] = list(d["step_length_m"])
        return d


@dataclass(frozen=True)
class SyntheticGroundTruth:
    step_frames: tuple
    swing_foot: tuple
    true_speed_mps: float
    true_step_length_m: float
    true_stride_left_m: float
    true_stride_right_m: float
    true_swing_time_s: float
    true_step_width_m: float
    frame_rate_hz: float

    @property
    def true_asymmetry_index(self) -> float:
        return asymmetry_index(self.true_stride_left_m, self.true_stride_right_m)

    def to_dict(self) -> dict:
        return {
            "step_frames": list(self.step_frames),
            "swing_foot": [str(f) for f in self.swing_foot],
            "frame_rate_hz": self.frame_rate_hz,
            "true": {
                "speed_mps": self.true_speed_mps,
                "step_length_m": self.true_step_length_m,
                "stride_left_m": self.true_stride_left_m,
                "stride_right_m": self.true_stride_right_m,
                "swing_time_s": self.true_swing_time_s,
                "step_width_m": self.true_step_width_m,
                "asymmetry_index": self.true_asymmetry_index,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticGroundTruth":
        t = d.get("true", {})
        return cls(
            step_frames=tuple(int(f) for f in d["step_frames"]),
            swing_foot=tuple(Foot(f) for f in d.get("swing_foot", ())),
            true_speed_mps=t.get("speed_mps"),
            true_step_length_m=t.get("step_length_m"),
            true_stride_left_m=t.get("stride_left_m"),
            true_stride_right_m=t.get("stride_right_m"),
            true_swing_time_s=t.get("swing_time_s"),
            true_step_width_m=t.get("step_width_m"),
            frame_rate_hz=float(d.get("frame_rate_hz", 30.0)),
        )


def _feet_trajectory(sc: GaitScenario):
    """Noise-free forward/lateral/vertical foot coordinates in the walker frame."""
    n = sc.n_steps
    per_step = sc.frame_rate_hz / sc.cadence_hz
    events = [int(round(k * per_step)) for k in range(n + 1)]
    closing = max(2, int(round(per_step / 2)))
    hold = max(3, int(round(per_step / 4)))
    total = events[-1] + closing + hold + 1

    feet = [Foot.LEFT, Foot.RIGHT]
    first = Foot(sc.first_swing)
    swing_order = [first if k % 2 == 0 else first.other for k in range(n)]
    s_of = dict(zip(feet, sc.step_lengths))

    fwd = {f: np.zeros(total) for f in feet}
    up = {f: np.zeros(total) for f in feet}
    pos = {first.other: 0.0, first: -s_of[first.other]}

    def move(foot, start, stop, target):
        span = stop - start
        tau = np.arange(span + 1) / span
        p0 = pos[foot]
        fwd[foot][start:stop + 1] = p0 + (target - p0) * smoothstep(tau)
        up[foot][start:stop + 1] = SWING_CLEARANCE_M * np.sin(np.pi * tau)
        pos[foot] = target

    for k, foot in enumerate(swing_order):
        other = foot.other
        a, b = events[k], events[k + 1]
        fwd[other][a:b + 1] = pos[other]
        move(foot, a, b, pos[other] + s_of[foot])
    last = swing_order[-1]
    rear = last.other
    a, b = events[-1], events[-1] + closing
    fwd[last][a:] = pos[last]
    move(rear, a, b, pos[last])
    fwd[rear][b:] = pos[rear]

    lateral = {Foot.LEFT: sc.stance_width_m / 2, Foot.RIGHT: -sc.stance_width_m / 2}
    return events[1:], swing_order, fwd, up, lateral, total


def generate(sc: GaitScenario):
    """Generate a clip and its ground truth.

    Jitter (Gaussian, per coordinate) and dropout (per joint and frame) are
    applied last, drawn from ``numpy.random.default_rng(sc.seed)``.

    Returns
    -------
    (PoseSequence, SyntheticGroundTruth)
    """
    events, order, fwd, up, lateral, total = _feet_trajectory(sc)
    heading = math.radians(sc.heading_deg)
    ex = np.array([math.cos(heading), math.sin(heading)])
    ey = np.array([-math.sin(heading), math.cos(heading)])

    pos = np.zeros((total, len(JOINT_NAMES), 3))
    for j, foot in enumerate((Foot.LEFT, Foot.RIGHT)):
        pos[:, j, :2] = np.outer(fwd[foot], ex) + np.outer(np.full(total, lateral[foot]), ey)
        pos[:, j, 2] = up[foot]
    pos[:, 2, :2] = 0.5 * (pos[:, 0, :2] + pos[:, 1, :2])
    pos[:, 2, 2] = sc.height_m

    rng = np.random.default_rng(sc.seed)
    if sc.noise_sigma_m > 0:
        pos = pos + rng.normal(0.0, sc.noise_sigma_m, size=pos.shape)
    if sc.dropout_prob > 0:
        drop = rng.random(pos.shape[:2]) < sc.dropout_prob
        pos[drop] = np.nan

    fps = sc.frame_rate_hz
    seq = PoseSequence.from_arrays(
        [k.value for k in JOINT_NAMES], pos, frame_rate_hz=fps, source_id=sc.name,
        timestamps=sc.start_time_s + np.arange(total) / fps)

    s_left, s_right = sc.step_lengths
    w = sc.stance_width_m
    step_of = {Foot.LEFT: s_left, Foot.RIGHT: s_right}
    times = np.asarray(events) / fps
    truth = SyntheticGroundTruth(
        step_frames=tuple(events),
        swing_foot=tuple(order),
        true_speed_mps=math.fsum(step_of[f] for f in order) / len(order) * sc.cadence_hz,
        true_step_length_m=s_left + s_right,
        true_stride_left_m=math.hypot(s_left, w),
        true_stride_right_m=math.hypot(s_right, w),
        true_swing_time_s=float(np.mean(np.diff(times))) if len(times) > 1 else 1 / sc.cadence_hz,
        true_step_width_m=w,
        frame_rate_hz=fps,
    )
    return seq, truth


def scenario_grid(n: int = 50, seed: int = 0, noise_sigma_m: float = 0.0, **overrides):
    """Seeded random scenarios: cadence 0.8-3 Hz, step length 0.05-0.8 m, duration 3-15 s.

    Each scenario gets its own seed, so jitter differs across clips while the
    whole grid stays reproducible.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        params = dict(
            step_length_m=float(rng.uniform(0.05, 0.8)),
            cadence_hz=float(rng.uniform(0.8, 3.0)),
            duration_s=float(rng.uniform(3.0, 15.0)),
            heading_deg=float(rng.uniform(0.0, 360.0)),
            first_swing="left" if rng.random() < 0.5 else "right",
            noise_sigma_m=noise_sigma_m,
            seed=seed * 1000 + i,
            name=f"grid{seed}-{i:03d}",
        )
        params.update(overrides)
        out.append(GaitScenario(**params))
    return out


# Joint heights as fractions of body height, and lateral offsets in meters
# (positive = walker's left), for the Kinect-format stick figure.
_STICK = {
    JointKind.HIP_CENTER: (0.53, 0.0), JointKind.SPINE: (0.62, 0.0),
    JointKind.SHOULDER_CENTER: (0.82, 0.0),
    JointKind.LEFT_SHOULDER: (0.80, 0.18), JointKind.LEFT_ELBOW: (0.63, 0.22),
    JointKind.LEFT_WRIST: (0.50, 0.23), JointKind.LEFT_HAND: (0.46, 0.23),
    JointKind.RIGHT_SHOULDER: (0.80, -0.18), JointKind.RIGHT_ELBOW: (0.63, -0.22),
    JointKind.RIGHT_WRIST: (0.50, -0.23), JointKind.RIGHT_HAND: (0.46, -0.23),
    JointKind.LEFT_HIP: (0.52, 0.10), JointKind.RIGHT_HIP: (0.52, -0.10),
}


def stick_figure(seq: PoseSequence, heading_deg: float = 0.0) -> PoseSequence:
    """Complete a feet-and-head sequence to the 20 Kinect joints.

    Upper-body joints ride above the feet midpoint; knees sit halfway between
    hip and ankle, ankles 7 cm above the feet. Frames must have all three
    source joints.
    """
    from .ingestion import KINECT_JOINTS

    src = seq.to_array([k.value for k in JOINT_NAMES])
    if np.isnan(src).any():
        raise ScenarioInvalid("stick figure needs complete frames (use dropout_prob=0)")
    h = math.radians(heading_deg)
    lat = np.array([-math.sin(h), math.cos(h), 0.0])
    lf, rf, head = src[:, 0], src[:, 1], src[:, 2]
    mid = 0.5 * (lf + rf)
    height = head[:, 2:3]
    pos = {JointKind.LEFT_FOOT: lf, JointKind.RIGHT_FOOT: rf, JointKind.HEAD: head}
    for kind, (frac, off) in _STICK.items():
        p = mid + off * lat
        p[:, 2] = frac * height[:, 0]
        pos[kind] = p
    for foot, ankle, hip, knee in (
            (JointKind.LEFT_FOOT, JointKind.LEFT_ANKLE, JointKind.LEFT_HIP, JointKind.LEFT_KNEE),
            (JointKind.RIGHT_FOOT, JointKind.RIGHT_ANKLE, JointKind.RIGHT_HIP, JointKind.RIGHT_KNEE)):
        a = pos[foot] + np.array([0.0, 0.0, 0.07])
        pos[ankle] = a
        pos[knee] = 0.5 * (a + pos[hip])
    arr = np.stack([pos[k] for k in KINECT_JOINTS], axis=1)
    return PoseSequence.from_arrays([k.value for k in KINECT_JOINTS], arr,
                                    frame_rate_hz=seq.frame_rate_hz, source_id=seq.source_id,
                                    timestamps=seq.timestamps, frame_indices=seq.frame_indices)
