"""Rule-based Critical View of Safety assessment over segmentation label maps."""

from cvsroi.label_io import (
    FUSED,
    STREAM1,
    STREAM2,
    ClassPalette,
    LabelMap,
    class_mask,
    load_label_map,
    save_label_map,
)
from cvsroi.fusion import FusionMode, fuse_streams
from cvsroi.geometry import RoiQuad
from cvsroi.roi import RoiConfig, estimate_roi
from cvsroi.rules import CvsAssessment, RuleThresholds, assess_cvs

__version__ = "0.1.0"

__all__ = [
    "FUSED",
    "STREAM1",
    "STREAM2",
    "ClassPalette",
    "CvsAssessment",
    "FusionMode",
    "LabelMap",
    "RoiConfig",
    "RoiQuad",
    "RuleThresholds",
    "assess_cvs",
    "class_mask",
    "estimate_roi",
    "fuse_streams",
    "load_label_map",
    "save_label_map",
]
