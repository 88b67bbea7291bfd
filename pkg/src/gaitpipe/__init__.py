"""Step detection and clinical gait parameters from 3D skeleton sequences."""
from .detection import (DetectorParams, DistanceSignal, Extremum, ExtremumKind,
                        StepDetectionResult, detect_steps, feet_distance, find_extrema,
                        remove_false_extrema, smooth_uniform)
from .errors import GaitError, NoStepsDetected
from .estimators import FeetDistanceTransformer, GaitAnalyzer, StepDetector, UniformSmoother
from .evaluation import Clip, EvalResult, evaluate, match_events
from .filtering import (FilterParams, filter_dimensions, filter_temporal, interpolate_gaps,
                        repair_gaps)
from .metrics import (Foot, GaitReport, StepEvent, assign_feet, asymmetry_index,
                      compute_gait_report)
from .model import Joint, JointKind, Point3, PoseSequence, SkeletonFrame, foot_positions
from .synth import GaitScenario, SyntheticGroundTruth, generate

__version__ = "0.1.0"

__all__ = [
    "Clip", "DetectorParams", "DistanceSignal", "EvalResult", "Extremum", "ExtremumKind",
    "FeetDistanceTransformer", "FilterParams", "Foot", "GaitAnalyzer", "GaitError", "GaitReport",
    "GaitScenario", "Joint", "JointKind", "NoStepsDetected", "Point3", "PoseSequence",
    "SkeletonFrame", "StepDetectionResult", "StepDetector", "StepEvent", "SyntheticGroundTruth",
    "UniformSmoother", "assign_feet", "asymmetry_index", "compute_gait_report", "detect_steps",
    "evaluate", "feet_distance", "filter_dimensions", "filter_temporal", "find_extrema",
    "foot_positions", "generate", "interpolate_gaps", "match_events", "remove_false_extrema",
    "repair_gaps", "smooth_uniform",
]
