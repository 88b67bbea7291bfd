"""Clinical gait parameters from detected steps.

Naming follows the source method rather than the usual biomechanics
convention: a *stride* sample is the feet separation at one step (credited to
the swing foot), and *step length* is the distance between two successive
placements of the same foot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .detection import Extremum, ExtremumKind, StepDetectionResult, _as_points
from .errors import BothZero, TooFewSteps
from .model import plane_axes


class Foot(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    def __str__(self):
        return self.value

    @property
    def other(self) -> "Foot":
        return Foot.RIGHT if self is Foot.LEFT else Foot.LEFT


@dataclass(frozen=True)
class StepEvent:
    frame: int
    time: float
    foot: Foot  # swing foot completing the step
    left_pos: tuple
    right_pos: tuple
    separation: float
    # Set when the displacement rule disagreed with left/right alternation.
    flagged: bool = False


@dataclass(frozen=True)
class PerStepSamples:
    """Raw samples behind every averaged field of a GaitReport."""

    stride_left: tuple = ()
    stride_right: tuple = ()
    step_length: tuple = ()
    step_width: tuple = ()
    swing_time: tuple = ()


@dataclass(frozen=True)
class GaitReport:
    n_steps: int = 0
    speed_mps: Optional[float] = None
    stride_left_m: Optional[float] = None
    stride_right_m: Optional[float] = None
    step_length_m: Optional[float] = None
    step_width_m: Optional[float] = None
    swing_time_s: Optional[float] = None
    asymmetry_index: Optional[float] = None
    per_step: PerStepSamples = field(default_factory=PerStepSamples)
    events: tuple = ()

    FIELDS = ("speed_mps", "stride_left_m", "stride_right_m", "step_length_m",
              "step_width_m", "swing_time_s", "asymmetry_index")

    def parameters(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def _mean(xs) -> Optional[float]:
    return math.fsum(xs) / len(xs) if len(xs) else None


def _horizontal(a, b, axes) -> float:
    i, j = axes
    return float(math.hypot(a[i] - b[i], a[j] - b[j]))


def asymmetry_index(stride_left: float, stride_right: float) -> float:
    """Symmetry index ``|L - R| / mean(L, R)``; 0 is symmetric, 2 is the maximum."""
    if stride_left < 0 or stride_right < 0:
        raise ValueError("stride lengths must be nonnegative")
    if stride_left == 0 and stride_right == 0:
        raise BothZero("both stride lengths are zero")
    return abs(stride_left - stride_right) / (0.5 * (stride_left + stride_right))


def assign_feet(result: StepDetectionResult, left, right, timestamps=None,
                plane="xy") -> list:
    """Attach a swing foot to every retained maximum.

    The swing foot is the one that moved farther in the ground plane since the
    preceding minimum (or the clip start). Consecutive events must alternate;
    when the displacement rule says otherwise, alternation wins and the event
    is flagged.
    """
    L = _as_points(left)
    R = _as_points(right)
    if timestamps is None:
        if result.signal is None:
            raise ValueError("timestamps required when the result carries no signal")
        timestamps = result.signal.timestamps
    ts = np.asarray(timestamps, dtype=float)
    axes = plane_axes(plane)
    min_frames = sorted(
        [e.frame for e in result.extrema if e.kind is ExtremumKind.MIN]
        + ([result.dropped_first.frame]
           if result.dropped_first is not None
           and result.dropped_first.kind is ExtremumKind.MIN else []))
    max_by_frame = {e.frame: e for e in result.extrema if e.kind is ExtremumKind.MAX}

    events = []
    prev_foot = None
    for f in result.step_frames:
        ref = max((m for m in min_frames if m < f), default=0)
        move_l = _horizontal(L[f], L[ref], axes)
        move_r = _horizontal(R[f], R[ref], axes)
        foot = Foot.LEFT if move_l >= move_r else Foot.RIGHT
        flagged = False
        if prev_foot is not None and foot is prev_foot:
            foot, flagged = foot.other, True
        ext = max_by_frame.get(f)
        sep = ext.value if ext is not None else _horizontal(L[f], R[f], axes)
        events.append(StepEvent(frame=int(f), time=float(ts[f]), foot=foot,
                                left_pos=tuple(map(float, L[f])), right_pos=tuple(map(float, R[f])),
                                separation=float(sep), flagged=flagged))
        prev_foot = foot
    return events


def compute_gait_report(events: Sequence[StepEvent], minima: Sequence[Extremum] = (),
                        timestamps=None, plane="xy", width_source: str = "raw") -> GaitReport:
    """Average the per-step samples into a GaitReport.

    Fields whose minimum event count is unmet are None: stride needs one event
    of that foot, swing time and speed need two events, step length needs a
    repeated foot, step width needs a retained minimum.

    Speed is the sum of the stride samples over the time those steps took,
    which is the number of steps times the mean swing time.
    """
    if not events:
        raise TooFewSteps("no step events")
    if width_source not in ("raw", "smoothed"):
        raise ValueError(f"width_source must be 'raw' or 'smoothed', got {width_source!r}")
    axes = plane_axes(plane)
    events = list(events)

    stride_l = tuple(e.separation for e in events if e.foot is Foot.LEFT)
    stride_r = tuple(e.separation for e in events if e.foot is Foot.RIGHT)

    step_len = []
    last_pos = {}
    for e in events:
        pos = e.left_pos if e.foot is Foot.LEFT else e.right_pos
        if e.foot in last_pos:
            step_len.append(_horizontal(pos, last_pos[e.foot], axes))
        last_pos[e.foot] = pos

    widths = tuple(float(m.value if width_source == "raw" else m.smoothed) for m in minima)
    swings = tuple(b.time - a.time for a, b in zip(events, events[1:]))

    swing_time = _mean(swings)
    speed = None
    if swing_time is not None and swing_time > 0:
        speed = math.fsum(stride_l + stride_r) / (len(events) * swing_time)
    sl, sr = _mean(stride_l), _mean(stride_r)
    asym = asymmetry_index(sl, sr) if sl is not None and sr is not None and sl + sr > 0 else None

    return GaitReport(
        n_steps=len(events),
        speed_mps=speed,
        stride_left_m=sl,
        stride_right_m=sr,
        step_length_m=_mean(step_len),
        step_width_m=_mean(widths),
        swing_time_s=swing_time,
        asymmetry_index=asym,
        per_step=PerStepSamples(stride_l, stride_r, tuple(step_len), widths, swings),
        events=tuple(events),
    )


def gait_report_from_detection(result: StepDetectionResult, left, right, plane="xy",
                               width_source: str = "raw") -> GaitReport:
    """Assign feet and compute the report in one call; empty report for zero steps."""
    if not result.step_frames:
        return GaitReport()
    events = assign_feet(result, left, right, plane=plane)
    return compute_gait_report(events, result.minima, plane=plane, width_source=width_source)
