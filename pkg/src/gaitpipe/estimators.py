"""scikit-learn style wrappers around the detector and gait metrics.

Nothing is learned from data; ``fit`` validates hyperparameters so the
objects work with ``clone``, ``get_params`` and parameter sweeps.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .detection import DetectorParams, detect_steps, feet_distance, smooth_uniform
from .errors import NoStepsDetected
from .evaluation import Clip, evaluate
from .filtering import FilterParams, repair_gaps
from .metrics import GaitReport, gait_report_from_detection
from .model import foot_positions, points_to_array
from .validation import check_sequences, check_signals


class FeetDistanceTransformer(BaseEstimator, TransformerMixin):
    """PoseSequence(s) -> raw horizontal feet distance per frame."""

    def __init__(self, plane="xy", min_confidence=0.0):
        self.plane = plane
        self.min_confidence = min_confidence

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        out = []
        for seq in check_sequences(X):
            left, right = foot_positions(seq, min_confidence=self.min_confidence)
            out.append(feet_distance(points_to_array(left), points_to_array(right), self.plane))
        return out


class UniformSmoother(BaseEstimator, TransformerMixin):
    def __init__(self, kernel_width=5):
        self.kernel_width = kernel_width

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        signals, single = check_signals(X)
        out = [smooth_uniform(s, self.kernel_width) for s in signals]
        return out[0] if single else out


class StepDetector(BaseEstimator):
    """Step detector with the estimator interface.

    ``predict`` returns, per sequence, the frame indices of detected steps
    (an empty array for non-walking clips). ``score`` is the fraction of
    sequences whose step count matches ``y``.
    """

    def __init__(self, kernel_width=5, alpha=0.2, plane="xy", min_steps=2, min_confidence=0.0):
        self.kernel_width = kernel_width
        self.alpha = alpha
        self.plane = plane
        self.min_steps = min_steps
        self.min_confidence = min_confidence

    def fit(self, X=None, y=None):
        self.params_ = DetectorParams(self.kernel_width, self.alpha, self.plane, self.min_steps)
        return self

    def detect(self, seq):
        """Full StepDetectionResult for one sequence; raises NoStepsDetected."""
        check_is_fitted(self)
        return detect_steps(seq, self.params_, self.min_confidence)

    def predict(self, X):
        check_is_fitted(self)
        out = []
        for seq in check_sequences(X):
            try:
                frames = self.detect(seq).step_frames
            except NoStepsDetected:
                frames = ()
            out.append(seq.frame_indices[list(frames)] if frames else np.array([], dtype=int))
        return out

    def score(self, X, y):
        seqs = check_sequences(X)
        pred = self.predict(seqs)
        clips = [Clip(str(i), p, t, s.frame_rate_hz) for i, (p, t, s) in enumerate(zip(pred, y, seqs))]
        return evaluate(clips).count_accuracy


class GaitAnalyzer(BaseEstimator, TransformerMixin):
    """PoseSequence(s) -> GaitReport(s): gap repair, detection and gait parameters."""

    def __init__(self, kernel_width=5, alpha=0.2, plane="xy", min_steps=2,
                 width_source="raw", filter_params=None):
        self.kernel_width = kernel_width
        self.alpha = alpha
        self.plane = plane
        self.min_steps = min_steps
        self.width_source = width_source
        self.filter_params = filter_params

    def fit(self, X=None, y=None):
        self.detector_ = StepDetector(self.kernel_width, self.alpha, self.plane,
                                      self.min_steps).fit()
        self.filter_params_ = self.filter_params or FilterParams()
        return self

    def analyze_one(self, seq):
        """``(GaitReport, StepDetectionResult)`` for one sequence."""
        check_is_fitted(self)
        seq = repair_gaps(seq, self.filter_params_).sequence
        try:
            result = self.detector_.detect(seq)
        except NoStepsDetected as exc:
            return GaitReport(), exc.result
        left, right = foot_positions(seq)
        report = gait_report_from_detection(result, points_to_array(left), points_to_array(right),
                                            plane=self.plane, width_source=self.width_source)
        return report, result

    def transform(self, X):
        return [self.analyze_one(seq)[0] for seq in check_sequences(X)]
