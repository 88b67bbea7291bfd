"""Skeleton sequence value types shared across the package.

Coordinates are meters in a right-handed world frame and times are seconds.
All types are immutable once constructed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import FormatError, InvalidSequence

AXES = {"x": 0, "y": 1, "z": 2}


class JointKind(str, Enum):
    """Named joints of the 20-joint Kinect v1 skeleton.

    Members compare equal to their string value, so frames can be keyed by
    plain strings for joints outside this list.
    """

    HIP_CENTER = "HipCenter"
    SPINE = "Spine"
    SHOULDER_CENTER = "ShoulderCenter"
    HEAD = "Head"
    LEFT_SHOULDER = "LeftShoulder"
    LEFT_ELBOW = "LeftElbow"
    LEFT_WRIST = "LeftWrist"
    LEFT_HAND = "LeftHand"
    RIGHT_SHOULDER = "RightShoulder"
    RIGHT_ELBOW = "RightElbow"
    RIGHT_WRIST = "RightWrist"
    RIGHT_HAND = "RightHand"
    LEFT_HIP = "LeftHip"
    LEFT_KNEE = "LeftKnee"
    LEFT_ANKLE = "LeftAnkle"
    LEFT_FOOT = "LeftFoot"
    RIGHT_HIP = "RightHip"
    RIGHT_KNEE = "RightKnee"
    RIGHT_ANKLE = "RightAnkle"
    RIGHT_FOOT = "RightFoot"

    def __str__(self):
        return self.value


_KIND_LOOKUP = {k.value.lower(): k for k in JointKind}
# Kinect SDK spelling ("FootLeft") maps onto the same members.
for _k in JointKind:
    for _side in ("Left", "Right"):
        if _k.value.startswith(_side):
            _KIND_LOOKUP[(_k.value[len(_side):] + _side).lower()] = _k

JointKey = Union[JointKind, str]


def joint_kind(name: str) -> JointKey:
    """Return the :class:`JointKind` for ``name``, or ``name`` itself for other joints."""
    if isinstance(name, JointKind):
        return name
    return _KIND_LOOKUP.get(str(name).lower(), str(name))


@dataclass(frozen=True, slots=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise InvalidSequence(f"non-finite coordinate in {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z


@dataclass(frozen=True, slots=True)
class Joint:
    kind: JointKey
    position: Point3
    confidence: float = 1.0
    # True for entries reconstructed by gap interpolation.
    synthetic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", joint_kind(self.kind))
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidSequence(f"confidence {self.confidence} outside [0, 1] for {self.kind}")


@dataclass(frozen=True)
class SkeletonFrame:
    frame_index: int
    timestamp: float
    joints: Mapping[JointKey, Joint]

    def __init__(self, frame_index: int, timestamp: float, joints: Iterable[Joint] | Mapping = ()):
        if frame_index < 0:
            raise InvalidSequence(f"negative frame index {frame_index}")
        if not math.isfinite(timestamp):
            raise InvalidSequence(f"non-finite timestamp at frame {frame_index}")
        if isinstance(joints, Mapping):
            joints = joints.values()
        table = {}
        for j in joints:
            if j.kind in table:
                raise InvalidSequence(f"duplicate joint {j.kind} in frame {frame_index}")
            table[j.kind] = j
        object.__setattr__(self, "frame_index", int(frame_index))
        object.__setattr__(self, "timestamp", float(timestamp))
        object.__setattr__(self, "joints", MappingProxyType(table))

    def __eq__(self, other):
        if not isinstance(other, SkeletonFrame):
            return NotImplemented
        return (self.frame_index == other.frame_index and self.timestamp == other.timestamp
                and dict(self.joints) == dict(other.joints))

    def __hash__(self):
        return hash((self.frame_index, self.timestamp, tuple(sorted(map(str, self.joints)))))

    def get(self, kind: JointKey) -> Optional[Joint]:
        return self.joints.get(joint_kind(kind))

    def with_joints(self, joints: Iterable[Joint]) -> "SkeletonFrame":
        return SkeletonFrame(self.frame_index, self.timestamp, joints)

    def positions(self) -> np.ndarray:
        """(n_joints, 3) array of joint positions, in insertion order."""
        if not self.joints:
            return np.zeros((0, 3))
        return np.array([tuple(j.position) for j in self.joints.values()], dtype=float)


@dataclass(frozen=True)
class PoseSequence:
    """Time-ordered skeleton frames of one person track."""

    frames: tuple
    frame_rate_hz: float = 30.0
    source_id: str = ""

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not (self.frame_rate_hz > 0 and math.isfinite(self.frame_rate_hz)):
            raise InvalidSequence(f"frame rate must be positive, got {self.frame_rate_hz}")
        for prev, cur in zip(frames, frames[1:]):
            if cur.frame_index <= prev.frame_index:
                raise InvalidSequence(
                    f"frame indices not strictly increasing ({prev.frame_index} -> {cur.frame_index})")
            if cur.timestamp <= prev.timestamp:
                raise InvalidSequence(
                    f"timestamps not strictly increasing at frame {cur.frame_index}")

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([f.timestamp for f in self.frames], dtype=float)

    @property
    def frame_indices(self) -> np.ndarray:
        return np.array([f.frame_index for f in self.frames], dtype=int)

    def joint_kinds(self) -> set:
        kinds = set()
        for f in self.frames:
            kinds.update(f.joints)
        return kinds

    def with_frames(self, frames: Sequence[SkeletonFrame], **changes) -> "PoseSequence":
        return replace(self, frames=tuple(frames), **changes)

    @classmethod
    def from_arrays(cls, names: Sequence[str], positions, frame_rate_hz: float = 30.0,
                    source_id: str = "", timestamps=None, frame_indices=None,
                    confidence=None) -> "PoseSequence":
        """Build a sequence from a ``(T, J, 3)`` array.

        NaN rows mark missing joints. Timestamps default to ``index / frame_rate_hz``.
        """
        pos = np.asarray(positions, dtype=float)
        if pos.ndim != 3 or pos.shape[1] != len(names) or pos.shape[2] != 3:
            raise ValueError(f"positions must have shape (T, {len(names)}, 3), got {pos.shape}")
        n = pos.shape[0]
        idx = np.arange(n) if frame_indices is None else np.asarray(frame_indices, dtype=int)
        ts = idx / frame_rate_hz if timestamps is None else np.asarray(timestamps, dtype=float)
        kinds = [joint_kind(nm) for nm in names]
        frames = []
        for t in range(n):
            joints = []
            for j, kind in enumerate(kinds):
                p = pos[t, j]
                if np.isnan(p).any():
                    continue
                c = 1.0 if confidence is None else float(confidence[t, j])
                joints.append(Joint(kind, Point3(float(p[0]), float(p[1]), float(p[2])), c))
            frames.append(SkeletonFrame(int(idx[t]), float(ts[t]), joints))
        return cls(tuple(frames), frame_rate_hz, source_id)

    def to_array(self, names: Sequence[str]) -> np.ndarray:
        """``(T, J, 3)`` array of the named joints, NaN where missing."""
        kinds = [joint_kind(nm) for nm in names]
        out = np.full((len(self.frames), len(kinds), 3), np.nan)
        for t, f in enumerate(self.frames):
            for j, kind in enumerate(kinds):
                jt = f.joints.get(kind)
                if jt is not None:
                    out[t, j] = tuple(jt.position)
        return out


FOOT_JOINTS = (JointKind.LEFT_FOOT, JointKind.RIGHT_FOOT)
ANKLE_JOINTS = (JointKind.LEFT_ANKLE, JointKind.RIGHT_ANKLE)


def foot_positions(seq: PoseSequence, preferred=FOOT_JOINTS, fallback=ANKLE_JOINTS,
                   min_confidence: float = 0.0):
    """Per-frame left and right foot positions.

    Each frame uses the ``preferred`` joint pair, falling back to ``fallback``
    for a side whose preferred joint is absent. Entries are ``None`` when
    neither joint is present or its confidence is below ``min_confidence``.

    Returns
    -------
    left, right : list of Point3 or None, each of length ``len(seq)``
    """
    if len(seq) == 0:
        raise InvalidSequence("empty pose sequence")
    left, right = [], []
    seen = False
    for f in seq.frames:
        for side, out in ((0, left), (1, right)):
            jt = f.joints.get(preferred[side])
            if jt is None and fallback is not None:
                jt = f.joints.get(fallback[side])
            if jt is not None:
                seen = True
                if jt.confidence < min_confidence:
                    jt = None
            out.append(None if jt is None else jt.position)
    if not seen:
        raise FormatError(f"no foot or ankle joints in sequence {seq.source_id!r}")
    return left, right


def plane_axes(plane) -> tuple:
    """Parse a plane name such as ``"xy"``, ``"x-z"`` or ``(0, 2)`` into two axis indices."""
    if isinstance(plane, str):
        letters = [c for c in plane.lower() if c in AXES]
        if len(letters) != 2:
            raise ValueError(f"plane must name two of x, y, z: {plane!r}")
        axes = (AXES[letters[0]], AXES[letters[1]])
    else:
        axes = tuple(int(a) for a in plane)
    if len(axes) != 2 or axes[0] == axes[1] or not all(0 <= a <= 2 for a in axes):
        raise ValueError(f"invalid plane {plane!r}")
    return axes


def vertical_axis(plane) -> int:
    a, b = plane_axes(plane)
    return 3 - a - b


def points_to_array(points: Sequence[Optional[Point3]]) -> np.ndarray:
    """``(T, 3)`` array with NaN rows for missing points."""
    out = np.full((len(points), 3), np.nan)
    for i, p in enumerate(points):
        if p is not None:
            out[i] = tuple(p)
    return out
