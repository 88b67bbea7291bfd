"""False-positive skeleton removal and gap repair.

Two rejection rules run ahead of step detection: a skeleton with an
implausible body size is dropped (``filter_dimensions``), and detections that
do not persist across frames are dropped (``filter_temporal``). Short gaps in
the surviving track are then filled by linear interpolation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (ANKLE_JOINTS, AXES, FOOT_JOINTS, Joint, JointKind, Point3, PoseSequence,
                    SkeletonFrame)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterParams:
    min_track_frames: int = 10
    max_gap_frames: int = 5
    min_height_m: float = 0.5
    max_height_m: float = 2.5
    max_width_m: float = 1.5
    max_centroid_jump_m: float = 0.5
    vertical_axis: str = "z"
    min_confidence: float = 0.0
    use_dimension: bool = True
    use_temporal: bool = True

    def __post_init__(self):
        if self.min_track_frames < 1:
            raise ValueError("min_track_frames must be >= 1")
        if self.max_gap_frames < 0:
            raise ValueError("max_gap_frames must be >= 0")
        for name in ("min_height_m", "max_height_m", "max_width_m", "max_centroid_jump_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.min_height_m < self.max_height_m:
            raise ValueError("min_height_m must be below max_height_m")
        if self.vertical_axis not in AXES:
            raise ValueError(f"vertical_axis must be one of x, y, z, got {self.vertical_axis!r}")


def skeleton_extent(frame: SkeletonFrame, vertical_axis: str = "z"):
    """``(height, width)`` of a skeleton: vertical span and widest horizontal joint distance."""
    pts = frame.positions()
    if len(pts) == 0:
        return 0.0, 0.0
    v = AXES[vertical_axis]
    h = [a for a in range(3) if a != v]
    height = float(pts[:, v].max() - pts[:, v].min())
    flat = pts[:, h]
    d = flat[:, None, :] - flat[None, :, :]
    width = float(np.sqrt((d ** 2).sum(-1)).max())
    return height, width


def frame_is_plausible(frame: SkeletonFrame, p: FilterParams) -> bool:
    if not frame.joints:
        return True
    height, width = skeleton_extent(frame, p.vertical_axis)
    if height > p.max_height_m or width > p.max_width_m:
        return False
    # A skeleton without a head cannot show its full height, so only a
    # complete one can be rejected as too short.
    if JointKind.HEAD in frame.joints and height < p.min_height_m:
        return False
    return True


def filter_dimensions(seq: PoseSequence, p: FilterParams = FilterParams()) -> PoseSequence:
    """Drop frames whose skeleton is too tall, too short or too wide."""
    kept = [f for f in seq.frames if frame_is_plausible(f, p)]
    if len(kept) < len(seq):
        log.debug("%s: dropped %d implausible frames", seq.source_id, len(seq) - len(kept))
    return seq if len(kept) == len(seq) else seq.with_frames(kept)


def _centroid(frame: SkeletonFrame) -> np.ndarray:
    pts = frame.positions()
    return pts.mean(axis=0) if len(pts) else np.full(3, np.nan)


def filter_temporal(seqs: Sequence[PoseSequence], p: FilterParams = FilterParams()) -> list:
    """Re-link detections into tracks and discard short-lived ones.

    Detections are grouped by timestamp. At each time, every pairing of an
    active track with a detection whose centroid lies within
    ``max_centroid_jump_m`` per elapsed frame is ranked by distance and
    assigned greedily; leftover detections start new tracks. A track stays
    active for ``max_gap_frames`` missed frames. Tracks shorter than
    ``min_track_frames`` are dropped; the rest come back longest first.
    """
    seqs = [s for s in seqs if len(s)]
    if not seqs:
        return []
    fps = max(s.frame_rate_hz for s in seqs)
    by_time = {}
    for si, s in enumerate(seqs):
        for fi, f in enumerate(s.frames):
            by_time.setdefault(f.timestamp, []).append((si, fi, f))
    t_first = min(by_time)

    tracks = []  # each: {"dets": [(si, fi, frame)], "c": centroid, "t": last time}
    for t in sorted(by_time):
        dets = by_time[t]
        cents = [_centroid(f) for _, _, f in dets]
        # order within a time step must not depend on input order
        order = sorted(range(len(dets)),
                       key=lambda k: (tuple(np.nan_to_num(cents[k], nan=np.inf)), len(dets[k][2].joints)))
        pairs = []
        for ti, tr in enumerate(tracks):
            gap = int(round((t - tr["t"]) * fps))
            if gap - 1 > p.max_gap_frames:
                continue
            radius = p.max_centroid_jump_m * max(1, gap)
            for rank, k in enumerate(order):
                dist = float(np.linalg.norm(cents[k] - tr["c"]))
                if dist <= radius:
                    pairs.append((dist, ti, rank))
        pairs.sort()
        used_t, used_d = set(), set()
        for dist, ti, rank in pairs:
            if ti in used_t or rank in used_d:
                continue
            used_t.add(ti)
            used_d.add(rank)
            k = order[rank]
            tracks[ti]["dets"].append(dets[k])
            tracks[ti]["c"], tracks[ti]["t"] = cents[k], t
        for rank, k in enumerate(order):
            if rank not in used_d:
                tracks.append({"dets": [dets[k]], "c": cents[k], "t": t})

    out = []
    for n, tr in enumerate(tracks):
        dets = tr["dets"]
        if len(dets) < p.min_track_frames:
            continue
        si0 = dets[0][0]
        if all(si == si0 for si, _, _ in dets) and len(dets) == len(seqs[si0]):
            out.append((seqs[si0], n))
            continue
        frames = [SkeletonFrame(int(round((f.timestamp - t_first) * fps)), f.timestamp, f.joints)
                  for _, _, f in dets]
        out.append((PoseSequence(tuple(frames), fps, f"{seqs[si0].source_id}#{n}"), n))
    out.sort(key=lambda item: (-len(item[0]), item[0].frames[0].timestamp, item[1]))
    return [s for s, _ in out]


@dataclass(frozen=True)
class GapRepair:
    sequence: PoseSequence
    n_splits: int
    n_interpolated: int


def _runs(mask: np.ndarray):
    """``(start, stop)`` half-open runs where ``mask`` is True."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[::2], edges[1::2]))


def repair_gaps(seq: PoseSequence, p: FilterParams = FilterParams(), required=None) -> GapRepair:
    """Fill short joint gaps and cut the sequence at long ones.

    Frames are laid on the full frame-index grid, so dropped frames count as
    gaps too. Missing spans of at most ``max_gap_frames`` frames bounded on
    both sides are filled per joint by linear interpolation in frame index;
    filled joints carry ``synthetic=True``. Frames where a ``required`` joint
    (the feet, or the ankles when no foot joint exists) is still missing cut
    the sequence, and the longest intact piece is returned.
    """
    if len(seq) == 0:
        return GapRepair(seq, 0, 0)
    kinds = seq.joint_kinds()
    if required is None:
        required = FOOT_JOINTS if any(k in kinds for k in FOOT_JOINTS) else ANKLE_JOINTS
    first = seq.frames[0].frame_index
    n = seq.frames[-1].frame_index - first + 1
    slot = seq.frame_indices - first
    ts = np.interp(np.arange(n), slot, seq.timestamps)
    ts[slot] = seq.timestamps

    filled = {}  # kind -> {grid position: Joint}
    n_interp = 0
    for kind in sorted(kinds, key=str):
        xyz = np.full((n, 3), np.nan)
        conf = np.zeros(n)
        for s, f in zip(slot, seq.frames):
            j = f.joints.get(kind)
            if j is not None and j.confidence >= p.min_confidence:
                xyz[s] = tuple(j.position)
                conf[s] = j.confidence
        missing = np.isnan(xyz[:, 0])
        new = {}
        for a, b in _runs(missing):
            if a == 0 or b == n or b - a > p.max_gap_frames:
                continue
            idx = np.arange(a, b)
            c = min(conf[a - 1], conf[b])
            for i in idx:
                w = (i - (a - 1)) / (b - (a - 1))
                pt = xyz[a - 1] + w * (xyz[b] - xyz[a - 1])
                new[int(i)] = Joint(kind, Point3(*map(float, pt)), float(c), synthetic=True)
            missing[a:b] = False
        filled[kind] = (new, missing)
        n_interp += len(new)

    bad = np.zeros(n, dtype=bool)
    for kind in required:
        if kind in filled:
            bad |= filled[kind][1]
        else:
            bad[:] = True
    good_runs = _runs(~bad)
    if not good_runs:
        return GapRepair(seq.with_frames(()), 0, 0)
    n_splits = len(good_runs) - 1
    a, b = max(good_runs, key=lambda r: (r[1] - r[0], -r[0]))

    if n_interp == 0 and a == 0 and b == n and len(seq) == n:
        return GapRepair(seq, 0, 0)
    existing = dict(zip(slot.tolist(), seq.frames))
    frames = []
    used = 0
    for i in range(a, b):
        orig = existing.get(i)
        joints = dict(orig.joints) if orig is not None else {}
        for kind, (new, _) in filled.items():
            if i in new:
                joints[kind] = new[i]
                used += 1
        frames.append(SkeletonFrame(first + i, float(ts[i]), joints.values()))
    if n_splits:
        log.info("%s: split at %d long gap(s); kept frames %d-%d",
                 seq.source_id, n_splits, first + a, first + b - 1)
    return GapRepair(seq.with_frames(frames), n_splits, used)


def interpolate_gaps(seq: PoseSequence, p: FilterParams = FilterParams()) -> PoseSequence:
    """Gap-repaired sequence; see :func:`repair_gaps` for the split count."""
    return repair_gaps(seq, p).sequence


def select_track(tracks: Sequence[PoseSequence], track_id: Optional[str] = None) -> PoseSequence:
    """The requested track, or the longest one."""
    if not tracks:
        raise ValueError("no tracks to select from")
    if track_id is None:
        return max(tracks, key=len)
    for t in tracks:
        if t.source_id == track_id or t.source_id.split("#")[0] == track_id:
            return t
    raise KeyError(f"track {track_id!r} not found")
