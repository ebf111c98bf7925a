"""Grasp planning for bin-picking from category-agnostic instance masks."""

from .camgeom import CameraModel, crop_aligned_rect, pixel_to_world, world_to_pixel
from .maskio import GroundTruthScene, InstanceLabelMap, load_label_map, save_label_map
from .metrics import EvalConfig, evaluate, mask_iou
from .planner import GraspPose, GraspRectSpec, GripperSpec, plan
from .scenegen import SceneConfig, generate, perturb_scores

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "EvalConfig",
    "GraspPose",
    "GraspRectSpec",
    "GripperSpec",
    "GroundTruthScene",
    "InstanceLabelMap",
    "SceneConfig",
    "crop_aligned_rect",
    "evaluate",
    "generate",
    "load_label_map",
    "mask_iou",
    "perturb_scores",
    "pixel_to_world",
    "plan",
    "save_label_map",
    "world_to_pixel",
]
