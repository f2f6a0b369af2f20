"""Collective lane detection: fuse lane boundaries perceived by two vehicles."""

from .codec import (BezierFitter, BezierSection, LaneMessage, codec_roundtrip, decode,
                    encode, fit_bezier, raw_size)
from .evaluation import EvalReport, aggregate, evaluate_lane, lane_error, perception_range
from .exceptions import ColdError
from .fusion import (FusedLane, FusibilityDecision, LaneFusion, Provenance, check_fusibility,
                     convoy_fuse, detect_overlap, estimate_apex, is_curve, spline_fuse)
from .geometry import Pose2, RelativePose, relative_pose, to_local, to_world
from .road import Arc, Lane, Polyline, Road, RoadSpec, Straight, build_road
from .scenario import ScenarioConfig, load_scenario, parse_scenario, pretty_print
from .sensor import DetectedLane, ErrorModel, sense
from .sim import Simulation, run_scenario
from .spline import NaturalCubicSpline, fit_spline, sample_spline

__version__ = "0.1.0"

__all__ = [
    "Arc", "BezierFitter", "BezierSection", "ColdError", "DetectedLane", "ErrorModel",
    "EvalReport", "FusedLane", "FusibilityDecision", "Lane", "LaneFusion", "LaneMessage",
    "NaturalCubicSpline", "Polyline", "Pose2", "Provenance", "RelativePose", "Road",
    "RoadSpec", "ScenarioConfig", "Simulation", "Straight", "aggregate", "build_road",
    "check_fusibility", "codec_roundtrip", "convoy_fuse", "decode", "detect_overlap",
    "encode", "estimate_apex", "evaluate_lane", "fit_bezier", "fit_spline", "is_curve",
    "lane_error", "load_scenario", "parse_scenario", "perception_range", "pretty_print",
    "raw_size", "relative_pose", "run_scenario", "sample_spline", "sense", "spline_fuse",
    "to_local", "to_world",
]
