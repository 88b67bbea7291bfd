"""Step detection from the horizontal distance between the two feet.

The pipeline is::

    feet positions -> distance d_t -> uniform smoothing -> local extrema
        -> false-extrema removal (threshold = alpha * range) -> drop first extremum

Every retained maximum of the smoothed distance is a step: the moment the
feet are farthest apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import (KernelTooLarge, LengthMismatch, MissingJoints, NoStepsDetected,
                     SignalTooShort, TooFewFrames)
from .model import PoseSequence, foot_positions, plane_axes, points_to_array


@dataclass(frozen=True)
class DetectorParams:
    """Detector settings.

    kernel_width : odd width of the uniform smoothing kernel, in frames.
    alpha : fraction of the extrema range below which an adjacent extremum
        pair is discarded as noise.
    plane : the two axes spanning the ground plane.
    min_steps : fewer retained maxima than this raises NoStepsDetected.
    """

    kernel_width: int = 5
    alpha: float = 0.2
    plane: str = "xy"
    min_steps: int = 2

    def __post_init__(self):
        if int(self.kernel_width) != self.kernel_width or self.kernel_width < 1 \
                or self.kernel_width % 2 == 0:
            raise ValueError(f"kernel_width must be an odd integer >= 1, got {self.kernel_width}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.min_steps < 1:
            raise ValueError(f"min_steps must be >= 1, got {self.min_steps}")
        plane_axes(self.plane)


class ExtremumKind(str, Enum):
    MAX = "max"
    MIN = "min"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Extremum:
    frame: int
    kind: ExtremumKind
    value: float  # raw distance at ``frame``
    smoothed: float  # smoothed distance at ``frame``; used for pruning

    def to_dict(self):
        return {"frame": self.frame, "kind": str(self.kind), "value": self.value,
                "smoothed": self.smoothed}


@dataclass(frozen=True)
class DistanceSignal:
    raw: np.ndarray
    smoothed: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        if not len(self.raw) == len(self.smoothed) == len(self.timestamps):
            raise LengthMismatch("raw, smoothed and timestamps must have equal length")
        for a in (self.raw, self.smoothed, self.timestamps):
            a.setflags(write=False)


@dataclass(frozen=True)
class StepDetectionResult:
    extrema: tuple
    range_r: float
    threshold_theta: float
    alpha: float
    step_frames: tuple = ()
    removed_pairs: tuple = ()
    dropped_first: Optional[Extremum] = None
    kernel_width: Optional[int] = None
    signal: Optional[DistanceSignal] = field(default=None, compare=False)

    @property
    def maxima(self):
        return [e for e in self.extrema if e.kind is ExtremumKind.MAX]

    @property
    def minima(self):
        return [e for e in self.extrema if e.kind is ExtremumKind.MIN]

    @property
    def n_steps(self):
        return len(self.step_frames)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "kernel_width": self.kernel_width,
            "range_r": self.range_r,
            "threshold_theta": self.threshold_theta,
            "step_frames": list(self.step_frames),
            "extrema": [e.to_dict() for e in self.extrema],
            "dropped_first": None if self.dropped_first is None else self.dropped_first.to_dict(),
            "removed_pairs": [[a.to_dict(), b.to_dict()] for a, b in self.removed_pairs],
        }


def _as_points(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        arr = points_to_array(points)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected (T, 3) positions, got shape {arr.shape}")
    return arr


def feet_distance(left, right, plane="xy") -> np.ndarray:
    """Euclidean distance between the feet restricted to the ground plane.

    ``left`` and ``right`` are ``(T, 3)`` arrays or sequences of Point3.
    """
    a = _as_points(left)
    b = _as_points(right)
    if len(a) != len(b):
        raise LengthMismatch(f"left has {len(a)} frames, right has {len(b)}")
    if np.isnan(a).any() or np.isnan(b).any():
        bad = np.flatnonzero(np.isnan(a).any(axis=1) | np.isnan(b).any(axis=1))
        raise MissingJoints(f"foot positions missing at frames {bad[:10].tolist()}")
    i, j = plane_axes(plane)
    diff = a - b
    return np.hypot(diff[:, i], diff[:, j])


def smooth_uniform(raw, kernel_width: int) -> np.ndarray:
    """Centered moving average with a window that shrinks at the edges.

    The window at index t is ``[max(0, t-h), min(T-1, t+h)]`` with
    ``h = (kernel_width - 1) // 2``, averaged over the frames it covers.
    """
    x = np.asarray(raw, dtype=float)
    n = len(x)
    if kernel_width < 1 or kernel_width % 2 == 0:
        raise ValueError(f"kernel_width must be odd and >= 1, got {kernel_width}")
    if kernel_width > n:
        raise KernelTooLarge(f"kernel width {kernel_width} exceeds signal length {n}")
    if kernel_width == 1:
        return x.copy()
    h = (kernel_width - 1) // 2
    out = np.empty(n)
    out[h:n - h] = np.convolve(x, np.ones(kernel_width), mode="valid") / kernel_width
    for t in list(range(h)) + list(range(n - h, n)):
        lo, hi = max(0, t - h), min(n - 1, t + h)
        out[t] = x[lo:hi + 1].sum() / (hi - lo + 1)
    return out


def find_extrema(smoothed) -> list:
    """Interior strict local extrema as ``(frame, kind)`` pairs.

    Runs of equal values are treated as one sample located at the run's
    first index. The first and last runs are never extrema, so the output
    alternates between maxima and minima.
    """
    x = np.asarray(smoothed, dtype=float)
    if len(x) < 3:
        raise SignalTooShort(f"need at least 3 samples, got {len(x)}")
    starts = np.flatnonzero(np.concatenate(([True], x[1:] != x[:-1])))
    vals = x[starts]
    out = []
    for k in range(1, len(vals) - 1):
        if vals[k] > vals[k - 1] and vals[k] > vals[k + 1]:
            out.append((int(starts[k]), ExtremumKind.MAX))
        elif vals[k] < vals[k - 1] and vals[k] < vals[k + 1]:
            out.append((int(starts[k]), ExtremumKind.MIN))
    return out


def _check_alternation(extrema):
    for a, b in zip(extrema, extrema[1:]):
        if a.kind is b.kind:
            raise ValueError(f"extrema do not alternate at frames {a.frame}, {b.frame}")


def remove_false_extrema(extrema: Sequence[Extremum], alpha: float) -> StepDetectionResult:
    """Discard adjacent extremum pairs whose difference is below ``alpha * range``.

    The range is the highest maximum minus the lowest minimum, computed once
    up front. The adjacent pair with the smallest difference goes first and
    the process repeats until every adjacent pair differs by at least the
    threshold. Dropping two neighbours from an alternating list leaves it
    alternating, so no merging is needed afterwards.
    """
    items = list(extrema)
    _check_alternation(items)
    maxima = [e.smoothed for e in items if e.kind is ExtremumKind.MAX]
    minima = [e.smoothed for e in items if e.kind is ExtremumKind.MIN]
    range_r = float(max(maxima) - min(minima)) if maxima and minima else 0.0
    theta = alpha * range_r
    removed = []
    while len(items) >= 2:
        diffs = [abs(a.smoothed - b.smoothed) for a, b in zip(items, items[1:])]
        i = int(np.argmin(diffs))
        if not diffs[i] < theta:
            break
        removed.append((items[i], items[i + 1]))
        del items[i:i + 2]
    return StepDetectionResult(extrema=tuple(items), range_r=range_r, threshold_theta=theta,
                               alpha=alpha, removed_pairs=tuple(removed))


def detect_steps_from_feet(left, right, timestamps, params: DetectorParams = DetectorParams()
                           ) -> StepDetectionResult:
    """Run the detector on foot tracks directly; see :func:`detect_steps`."""
    raw = feet_distance(left, right, params.plane)
    ts = np.asarray(timestamps, dtype=float)
    if len(ts) != len(raw):
        raise LengthMismatch(f"{len(ts)} timestamps for {len(raw)} frames")
    if len(raw) < max(3, params.kernel_width):
        raise TooFewFrames(
            f"{len(raw)} frames; need at least {max(3, params.kernel_width)}")
    smoothed = smooth_uniform(raw, params.kernel_width)
    extrema = [Extremum(f, kind, float(raw[f]), float(smoothed[f]))
               for f, kind in find_extrema(smoothed)]
    pruned = remove_false_extrema(extrema, params.alpha)
    kept = list(pruned.extrema)
    first = kept.pop(0) if kept else None
    result = StepDetectionResult(
        extrema=tuple(kept),
        range_r=pruned.range_r,
        threshold_theta=pruned.threshold_theta,
        alpha=params.alpha,
        step_frames=tuple(e.frame for e in kept if e.kind is ExtremumKind.MAX),
        removed_pairs=pruned.removed_pairs,
        dropped_first=first,
        kernel_width=params.kernel_width,
        signal=DistanceSignal(raw, smoothed, ts),
    )
    if result.n_steps < params.min_steps:
        raise NoStepsDetected(
            f"{result.n_steps} step(s) detected, fewer than min_steps={params.min_steps}",
            result=result)
    return result


def detect_steps(seq: PoseSequence, params: DetectorParams = DetectorParams(),
                 min_confidence: float = 0.0) -> StepDetectionResult:
    """Detect steps in a pose sequence.

    Raises
    ------
    TooFewFrames
        The sequence is shorter than the smoothing kernel (or 3 frames).
    MissingJoints
        Some frame lacks a foot position; repair gaps first.
    NoStepsDetected
        Fewer than ``params.min_steps`` maxima survived. The partial result is
        attached to the exception.
    """
    if len(seq) < max(3, params.kernel_width):
        raise TooFewFrames(f"{len(seq)} frames; need at least {max(3, params.kernel_width)}")
    left, right = foot_positions(seq, min_confidence=min_confidence)
    return detect_steps_from_feet(left, right, seq.timestamps, params)
