"""Step-count accuracy and frame-error metrics against ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyEvaluation


def match_events(predicted: Sequence[int], truth: Sequence[int]) -> list:
    """Order-preserving pairing of predicted and true event frames.

    Equal-length lists pair in order. Otherwise every event of the shorter
    list is matched to a distinct event of the longer one, keeping order, so
    that the total absolute frame difference is minimal (dynamic programming,
    O(len(short) * len(long))). Ties prefer earlier partners.

    Returns a list of ``(pred, truth)`` pairs.
    """
    pred = list(predicted)
    true = list(truth)
    if len(pred) == len(true):
        return list(zip(pred, true))
    if not pred or not true:
        return []
    swap = len(pred) > len(true)
    short, long_ = (true, pred) if swap else (pred, true)
    m, n = len(short), len(long_)
    # cost[i][j]: best total for short[:i] matched within long_[:j]
    inf = math.inf
    cost = np.full((m + 1, n + 1), inf)
    cost[0, :] = 0.0
    take = np.zeros((m + 1, n + 1), dtype=bool)
    for i in range(1, m + 1):
        for j in range(i, n + 1):
            skip = cost[i, j - 1]
            use = cost[i - 1, j - 1] + abs(short[i - 1] - long_[j - 1])
            if use <= skip:
                cost[i, j], take[i, j] = use, True
            else:
                cost[i, j] = skip
    pairs = []
    i, j = m, n
    while i > 0:
        if take[i, j]:
            pairs.append((short[i - 1], long_[j - 1]))
            i -= 1
        j -= 1
    pairs.reverse()
    return [(b, a) for a, b in pairs] if swap else pairs


@dataclass(frozen=True)
class Clip:
    """Predicted and true step frames of one clip."""

    clip_id: str
    predicted: tuple
    truth: tuple
    frame_rate_hz: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "predicted", tuple(int(f) for f in self.predicted))
        object.__setattr__(self, "truth", tuple(int(f) for f in self.truth))


@dataclass(frozen=True)
class ClipScore:
    clip_id: str
    predicted_count: int
    true_count: int
    frame_errors: tuple
    unmatched_predicted: tuple
    unmatched_truth: tuple
    frame_rate_hz: float

    @property
    def count_correct(self) -> bool:
        return self.predicted_count == self.true_count


@dataclass(frozen=True)
class EvalResult:
    n_clips: int
    count_accuracy: float
    mean_frame_error: Optional[float]
    mean_time_error_s: Optional[float]
    per_clip: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "n_clips": self.n_clips,
            "count_accuracy": self.count_accuracy,
            "mean_frame_error": self.mean_frame_error,
            "mean_time_error_s": self.mean_time_error_s,
            "per_clip": [{
                "clip_id": c.clip_id,
                "predicted_count": c.predicted_count,
                "true_count": c.true_count,
                "frame_errors": list(c.frame_errors),
                "unmatched_predicted": list(c.unmatched_predicted),
                "unmatched_truth": list(c.unmatched_truth),
                "frame_rate_hz": c.frame_rate_hz,
            } for c in self.per_clip],
        }


def score_clip(clip: Clip) -> ClipScore:
    pairs = match_events(clip.predicted, clip.truth)
    used_p = {p for p, _ in pairs}
    used_t = {t for _, t in pairs}
    return ClipScore(
        clip_id=clip.clip_id,
        predicted_count=len(clip.predicted),
        true_count=len(clip.truth),
        frame_errors=tuple(abs(p - t) for p, t in pairs),
        unmatched_predicted=tuple(p for p in clip.predicted if p not in used_p),
        unmatched_truth=tuple(t for t in clip.truth if t not in used_t),
        frame_rate_hz=clip.frame_rate_hz,
    )


def evaluate(clips: Sequence[Clip]) -> EvalResult:
    """Fraction of clips with the exact step count, and mean L1 frame error over matched events.

    Unmatched events only affect the count accuracy. The error fields are
    None when no event was matched anywhere.
    """
    clips = list(clips)
    if not clips:
        raise EmptyEvaluation("no clips to evaluate")
    scores = sorted((score_clip(c) for c in clips), key=lambda s: s.clip_id)
    correct = sum(s.count_correct for s in scores)
    errors = [e for s in scores for e in s.frame_errors]
    mean_frame = math.fsum(errors) / len(errors) if errors else None
    rates = {s.frame_rate_hz for s in scores if s.frame_errors}
    if mean_frame is None:
        mean_time = None
    elif len(rates) == 1:
        mean_time = mean_frame / rates.pop()
    else:
        mean_time = math.fsum(e / s.frame_rate_hz for s in scores for e in s.frame_errors) / len(errors)
    return EvalResult(
        n_clips=len(scores),
        count_accuracy=correct / len(scores),
        mean_frame_error=mean_frame,
        mean_time_error_s=mean_time,
        per_clip=tuple(scores),
    )
