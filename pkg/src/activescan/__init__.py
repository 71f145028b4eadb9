"""Adaptive-speed coverage flights for UAV crop surveys, in simulation."""

from .controller import AdaptiveController, ControllerConfig, gain
from .evaluation import EvalReport, evaluate_run, iou, reconstruct_mosaic, ssim_map
from .geometry import FieldFrame, Polygon, Polyline
from .mission import MissionConfig, MissionLog, run_adaptive, run_baseline, run_mission
from .perception import PrototypeSegmenter, SegmentationResult, SegmenterConfig, make_segmenter, register_segmenter
from .planner import CoveragePlan, plan_coverage
from .sensor import CameraModel
from .worldgen import FieldSpec, FieldWorld, Region, generate_field, load_field

__version__ = "0.1.0"

__all__ = [
    "AdaptiveController",
    "CameraModel",
    "ControllerConfig",
    "CoveragePlan",
    "EvalReport",
    "FieldFrame",
    "FieldSpec",
    "FieldWorld",
    "MissionConfig",
    "MissionLog",
    "Polygon",
    "Polyline",
    "PrototypeSegmenter",
    "Region",
    "SegmentationResult",
    "SegmenterConfig",
    "evaluate_run",
    "gain",
    "generate_field",
    "iou",
    "load_field",
    "make_segmenter",
    "plan_coverage",
    "reconstruct_mosaic",
    "register_segmenter",
    "run_adaptive",
    "run_baseline",
    "run_mission",
    "ssim_map",
]
