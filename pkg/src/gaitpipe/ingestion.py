"""Readers and writers for skeleton files, plus pinhole back-projection.

Kinect skeleton text
    One frame per line: an integer frame index followed by 20 joints x 3
    floats (meters, camera coordinates), in the order of ``KINECT_JOINTS``.
    This is the layout of the UTKinect-Action3D ``joints_*.txt`` files.

Pose JSONL
    One JSON object per line::

        {"t": 12.5, "track": "a", "joints": [{"name": "LeftFoot", "x": 0.1,
         "y": 0.0, "z": 2.0, "conf": 0.9}, ...]}

    ``conf`` is optional. Records are grouped by ``track``.

Camera convention
    ``rotation`` and ``translation`` map world to camera coordinates,
    ``P_cam = R @ P_world + t``, so back-projection computes
    ``P_world = R.T @ (P_cam - t)``. Rotation is stored row-major.
"""
from __future__ import annotations

import json
import math
import os
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CalibrationError, DuplicateTimestamp, EmptyInput, FormatError
from .model import Joint, JointKind, Point3, PoseSequence, SkeletonFrame

# Kinect v1 skeleton joint order; index 15 is LeftFoot and 19 is RightFoot.
KINECT_JOINTS = (
    JointKind.HIP_CENTER, JointKind.SPINE, JointKind.SHOULDER_CENTER, JointKind.HEAD,
    JointKind.LEFT_SHOULDER, JointKind.LEFT_ELBOW, JointKind.LEFT_WRIST, JointKind.LEFT_HAND,
    JointKind.RIGHT_SHOULDER, JointKind.RIGHT_ELBOW, JointKind.RIGHT_WRIST, JointKind.RIGHT_HAND,
    JointKind.LEFT_HIP, JointKind.LEFT_KNEE, JointKind.LEFT_ANKLE, JointKind.LEFT_FOOT,
    JointKind.RIGHT_HIP, JointKind.RIGHT_KNEE, JointKind.RIGHT_ANKLE, JointKind.RIGHT_FOOT,
)
KINECT_FIELDS = 1 + 3 * len(KINECT_JOINTS)
DEFAULT_FRAME_RATE = 30.0


def _read_text(src):
    """Return ``(text, name)`` for a path, bytes, or an open text/binary stream."""
    if isinstance(src, (bytes, bytearray)):
        return bytes(src).decode("utf-8"), "<bytes>"
    if isinstance(src, (str, os.PathLike)):
        p = Path(src)
        return p.read_text(encoding="utf-8"), str(p)
    data = src.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data, getattr(src, "name", "<stream>")


def _write_text(text: str, dest):
    if dest is None:
        return text
    if isinstance(dest, (str, os.PathLike)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)
    return text


def _fmt(x: float) -> str:
    return repr(float(x))


# -- Kinect skeleton text -----------------------------------------------------

def parse_kinect_skeleton_file(src, frame_rate_hz: float = DEFAULT_FRAME_RATE,
                               source_id: Optional[str] = None) -> PoseSequence:
    """Parse a Kinect skeleton text file into a PoseSequence.

    Timestamps are ``frame_index / frame_rate_hz``. Lines out of frame
    order are sorted; a repeated frame index is an error.
    """
    text, name = _read_text(src)
    frames = []
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != KINECT_FIELDS:
            raise FormatError(f"expected {KINECT_FIELDS} fields, got {len(parts)}",
                              line=lineno, source=name)
        try:
            idx = int(parts[0])
        except ValueError:
            raise FormatError(f"bad frame index {parts[0]!r}", line=lineno, source=name) from None
        try:
            vals = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise FormatError(f"unparsable float ({exc})", line=lineno, source=name) from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError("non-finite coordinate", line=lineno, source=name)
        if idx < 0:
            raise FormatError(f"negative frame index {idx}", line=lineno, source=name)
        if idx in seen:
            raise DuplicateTimestamp(f"frame index {idx} already appeared on line {seen[idx]}",
                                     line=lineno, source=name)
        seen[idx] = lineno
        joints = [Joint(kind, Point3(*vals[3 * j:3 * j + 3])) for j, kind in enumerate(KINECT_JOINTS)]
        frames.append(SkeletonFrame(idx, idx / frame_rate_hz, joints))
    if not frames:
        raise EmptyInput("no frames", source=name)
    frames.sort(key=lambda f: f.frame_index)
    if source_id is None:
        source_id = name if name.startswith("<") else Path(name).stem
    return PoseSequence(tuple(frames), frame_rate_hz, source_id)


def serialize_kinect_skeleton(seq: PoseSequence, dest=None) -> str:
    """Write ``seq`` in Kinect skeleton text format; every frame needs all 20 joints."""
    lines = []
    for f in seq.frames:
        fields_ = [str(f.frame_index)]
        for kind in KINECT_JOINTS:
            jt = f.joints.get(kind)
            if jt is None:
                raise FormatError(f"frame {f.frame_index} lacks joint {kind}")
            fields_.extend(_fmt(c) for c in jt.position)
        lines.append(" ".join(fields_))
    return _write_text("\n".join(lines) + "\n", dest)


# -- Pose JSONL ---------------------------------------------------------------

def _number(rec, key, lineno, name):
    v = rec.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise FormatError(f"field {key!r} must be a finite number", line=lineno, source=name)
    return float(v)


def _parse_joint(obj, lineno, name):
    if not isinstance(obj, dict) or not isinstance(obj.get("name"), str):
        raise FormatError("joint entries need a string 'name'", line=lineno, source=name)
    xyz = [_number(obj, k, lineno, name) for k in ("x", "y", "z")]
    conf = _number(obj, "conf", lineno, name) if "conf" in obj else 1.0
    if not 0.0 <= conf <= 1.0:
        raise FormatError(f"confidence {conf} outside [0, 1]", line=lineno, source=name)
    return Joint(obj["name"], Point3(*xyz), conf)


def estimate_frame_rate(timestamps: Sequence[float], default: float = DEFAULT_FRAME_RATE) -> float:
    """Frame rate from the median timestamp spacing; ``default`` for fewer than 2 frames.

    Rounded to 6 decimals so ``i / 30`` timestamps give exactly 30.0.
    """
    ts = np.sort(np.asarray(timestamps, dtype=float))
    if len(ts) < 2:
        return default
    return round(float(1.0 / np.median(np.diff(ts))), 6)


def parse_pose_jsonl(src, frame_rate_hz: Optional[float] = None) -> list:
    """Parse pose JSONL into one PoseSequence per track, in order of first appearance.

    Records are sorted by time within a track. Frame indices count frames
    from the track's first record, ``round((t - t0) * frame_rate_hz)``; the
    rate is estimated from the timestamps when not given.
    """
    text, name = _read_text(src)
    tracks = OrderedDict()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc.msg})", line=lineno, source=name) from None
        if not isinstance(rec, dict):
            raise FormatError("record must be a JSON object", line=lineno, source=name)
        t = _number(rec, "t", lineno, name)
        track = rec.get("track")
        if isinstance(track, bool) or not isinstance(track, (str, int)):
            raise FormatError("field 'track' must be a string", line=lineno, source=name)
        joints = rec.get("joints")
        if not isinstance(joints, list):
            raise FormatError("missing 'joints' array", line=lineno, source=name)
        parsed = [_parse_joint(j, lineno, name) for j in joints]
        kinds = [j.kind for j in parsed]
        if len(set(kinds)) != len(kinds):
            raise FormatError("duplicate joint name in record", line=lineno, source=name)
        tracks.setdefault(str(track), []).append((t, lineno, parsed))
    if not tracks:
        raise EmptyInput("no records", source=name)

    out = []
    for track, recs in tracks.items():
        recs.sort(key=lambda r: (r[0], r[1]))
        for (t0, _, _), (t1, ln, _) in zip(recs, recs[1:]):
            if t1 == t0:
                raise DuplicateTimestamp(f"track {track!r} repeats timestamp {t1}",
                                         line=ln, source=name)
        fps = frame_rate_hz or estimate_frame_rate([r[0] for r in recs])
        start = recs[0][0]
        frames = []
        for t, ln, joints in recs:
            idx = int(round((t - start) * fps))
            if frames and idx <= frames[-1].frame_index:
                raise FormatError(
                    f"track {track!r}: timestamps closer than one frame at {fps:g} Hz",
                    line=ln, source=name)
            frames.append(SkeletonFrame(idx, t, joints))
        out.append(PoseSequence(tuple(frames), fps, track))
    return out


def pose_jsonl_records(seq: PoseSequence, track: Optional[str] = None) -> Iterable[dict]:
    track = seq.source_id if track is None else track
    for f in seq.frames:
        yield {
            "t": f.timestamp,
            "track": track,
            "joints": [{"name": str(j.kind), "x": j.position.x, "y": j.position.y,
                        "z": j.position.z, "conf": j.confidence} for j in f.joints.values()],
        }


def serialize_pose_jsonl(seqs, dest=None) -> str:
    """Write one or more sequences as pose JSONL, track id taken from ``source_id``."""
    if isinstance(seqs, PoseSequence):
        seqs = [seqs]
    lines = [json.dumps(rec) for s in seqs for rec in pose_jsonl_records(s)]
    return _write_text("".join(line + "\n" for line in lines), dest)


# -- Camera model -------------------------------------------------------------

@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise CalibrationError(f"focal lengths must be positive (fx={self.fx}, fy={self.fy})")
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.cx, self.cy)):
            raise CalibrationError("intrinsics must be finite")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class CameraExtrinsics:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.isfinite(r).all() and np.isfinite(t).all()):
            raise CalibrationError("extrinsics must be finite")
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-6 or abs(np.linalg.det(r) - 1.0) > 1e-6:
            raise CalibrationError("rotation must be orthonormal with determinant +1")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "CameraExtrinsics":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class ImageJoint:
    name: str
    u: float
    v: float
    depth: float
    confidence: float = 1.0


@dataclass(frozen=True)
class ImagePose:
    frame_index: int
    timestamp: float
    joints: tuple


def back_project_points(uvz, intr: CameraIntrinsics, extr: CameraExtrinsics) -> np.ndarray:
    """Vectorized back-projection of ``(N, 3)`` rows ``(u, v, depth)`` to world points."""
    a = np.atleast_2d(np.asarray(uvz, dtype=float))
    z = a[:, 2]
    if (z <= 0).any() or not np.isfinite(a).all():
        raise CalibrationError("depth must be positive and finite for back-projection")
    cam = np.column_stack(((a[:, 0] - intr.cx) * z / intr.fx, (a[:, 1] - intr.cy) * z / intr.fy, z))
    return (cam - extr.translation) @ extr.rotation


def project_points(points, intr: CameraIntrinsics, extr: CameraExtrinsics) -> np.ndarray:
    """Inverse of :func:`back_project_points`: world points to ``(u, v, depth)``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    cam = p @ extr.rotation.T + extr.translation
    z = cam[:, 2]
    if (z <= 0).any():
        raise CalibrationError("point behind the camera")
    return np.column_stack((intr.fx * cam[:, 0] / z + intr.cx, intr.fy * cam[:, 1] / z + intr.cy, z))


def back_project(pose: ImagePose, intr: CameraIntrinsics, extr: CameraExtrinsics) -> SkeletonFrame:
    """Lift an image-space pose to a world-frame skeleton with the pinhole model."""
    if not pose.joints:
        return SkeletonFrame(pose.frame_index, pose.timestamp, ())
    world = back_project_points([(j.u, j.v, j.depth) for j in pose.joints], intr, extr)
    joints = [Joint(j.name, Point3(*map(float, p)), j.confidence)
              for j, p in zip(pose.joints, world)]
    return SkeletonFrame(pose.frame_index, pose.timestamp, joints)


def project(frame: SkeletonFrame, intr: CameraIntrinsics, extr: CameraExtrinsics) -> ImagePose:
    joints = list(frame.joints.values())
    uvz = project_points([tuple(j.position) for j in joints], intr, extr) if joints else []
    return ImagePose(frame.frame_index, frame.timestamp, tuple(
        ImageJoint(str(j.kind), float(p[0]), float(p[1]), float(p[2]), j.confidence)
        for j, p in zip(joints, uvz)))


def back_project_sequence(seq: PoseSequence, intr: CameraIntrinsics,
                          extr: CameraExtrinsics) -> PoseSequence:
    """Treat each joint's ``(x, y, z)`` as ``(u, v, depth)`` and lift the whole sequence."""
    frames = []
    for f in seq.frames:
        pose = ImagePose(f.frame_index, f.timestamp, tuple(
            ImageJoint(str(j.kind), j.position.x, j.position.y, j.position.z, j.confidence)
            for j in f.joints.values()))
        frames.append(back_project(pose, intr, extr))
    return seq.with_frames(frames)


def load_camera_config(src):
    """Read a camera JSON document.

    Keys: ``fx, fy, cx, cy``; optional ``rotation`` (9 numbers, row-major,
    default identity) and ``translation`` (3 numbers, default zero).
    """
    text, name = _read_text(src)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{name}: invalid JSON ({exc.msg})") from None
    try:
        intr = CameraIntrinsics(*(float(doc[k]) for k in ("fx", "fy", "cx", "cy")))
        rot = doc.get("rotation", [1, 0, 0, 0, 1, 0, 0, 0, 1])
        trans = doc.get("translation", [0, 0, 0])
        if len(rot) != 9 or len(trans) != 3:
            raise CalibrationError(f"{name}: rotation needs 9 entries and translation 3")
        extr = CameraExtrinsics(np.array(rot, dtype=float).reshape(3, 3), np.array(trans, dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CalibrationError):
            raise
        raise CalibrationError(f"{name}: bad camera config ({exc})") from None
    return intr, extr


def load_sequences(path, fmt: Optional[str] = None, frame_rate_hz: Optional[float] = None) -> list:
    """Parse any supported file; ``fmt`` is 'kinect-skeleton' or 'pose-jsonl' (else by extension)."""
    fmt = fmt or guess_format(path)
    if fmt == "pose-jsonl":
        return parse_pose_jsonl(path, frame_rate_hz=frame_rate_hz)
    if fmt == "kinect-skeleton":
        return [parse_kinect_skeleton_file(path, frame_rate_hz or DEFAULT_FRAME_RATE)]
    raise FormatError(f"unknown input format {fmt!r}")


def guess_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        return "pose-jsonl"
    if suffix in (".txt", ".skel"):
        return "kinect-skeleton"
    raise FormatError(f"cannot infer input format from extension {suffix!r}", source=path)
