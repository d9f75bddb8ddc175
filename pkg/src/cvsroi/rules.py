"""Rule-based evaluation of the three CVS criteria inside the ROI.

C1  no fat pixel in the ROI and the largest liver cluster in the ROI is bigger than ``t_liver``
C2  the largest cystic-plate cluster in the ROI is bigger than ``t_cp``
C3  exactly one cystic-duct and exactly one cystic-artery cluster in the ROI
    (clusters under ``min_cluster`` pixels are ignored)

Thresholds are strict: a cluster of exactly ``t_liver`` pixels fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from cvsroi.errors import EstimationFailure, InvalidRegion, PaletteMismatch
from cvsroi.geometry import RoiQuad
from cvsroi.label_io import CYSTIC_ARTERY, CYSTIC_DUCT, CYSTIC_PLATE, FAT, FUSED, LIVER, LabelMap
from cvsroi.regions import DEFAULT_CONNECTIVITY, clusters_in_region, region_mask
from cvsroi.roi import RoiConfig, estimate_roi

EVIDENCE_KEYS = (
    "fat_in_roi",
    "liver_largest_in_roi",
    "cystic_plate_largest_in_roi",
    "duct_clusters_in_roi",
    "artery_clusters_in_roi",
)


@dataclass(frozen=True)
class RuleThresholds:
    t_liver: int = 100
    t_cp: int = 100
    min_cluster: int = 5

    def __post_init__(self):
        for name in ("t_liver", "t_cp", "min_cluster"):
            if getattr(self, name) < 0:
                raise ValueError(f"rules.{name} must be >= 0")


@dataclass(frozen=True)
class AssessConfig:
    roi: RoiConfig = field(default_factory=RoiConfig)
    rules: RuleThresholds = field(default_factory=RuleThresholds)
    connectivity: int = DEFAULT_CONNECTIVITY


@dataclass(frozen=True)
class CvsAssessment:
    c1: bool
    c2: bool
    c3: bool
    cvs: bool
    evidence: Dict[str, int]
    roi: Optional[RoiQuad] = None
    failure: Optional[str] = None

    def __post_init__(self):
        if self.cvs != (self.c1 and self.c2 and self.c3):
            raise ValueError("cvs must equal c1 and c2 and c3")

    def labels(self) -> Dict[str, bool]:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "cvs": self.cvs}

    def to_json(self, frame: Optional[str] = None) -> dict:
        out = {} if frame is None else {"frame": frame}
        out.update(self.labels())
        out["evidence"] = dict(self.evidence)
        out["roi"] = self.roi.to_list() if self.roi is not None else {"failure": self.failure}
        return out


def _check(label_map: LabelMap, roi):
    if label_map.palette != FUSED:
        raise PaletteMismatch(f"rules need the fused palette, got {label_map.palette.stream}")
    if not isinstance(roi, RoiQuad):
        raise InvalidRegion(f"expected RoiQuad, got {type(roi).__name__}")


def _largest_in(label_map, name, roi, connectivity) -> int:
    clusters = clusters_in_region(label_map, FUSED.id_of(name), roi, connectivity)
    return clusters[0].size if clusters else 0


def assess_c1(label_map: LabelMap, roi: RoiQuad, th: RuleThresholds = RuleThresholds(),
              connectivity: int = DEFAULT_CONNECTIVITY) -> Tuple[bool, dict]:
    _check(label_map, roi)
    inside = region_mask(roi, label_map.shape)
    fat = int(np.count_nonzero(inside & (label_map.data == FUSED.id_of(FAT))))
    liver = _largest_in(label_map, LIVER, roi, connectivity)
    return fat == 0 and liver > th.t_liver, {"fat_in_roi": fat, "liver_largest_in_roi": liver}


def assess_c2(label_map: LabelMap, roi: RoiQuad, th: RuleThresholds = RuleThresholds(),
              connectivity: int = DEFAULT_CONNECTIVITY) -> Tuple[bool, dict]:
    _check(label_map, roi)
    plate = _largest_in(label_map, CYSTIC_PLATE, roi, connectivity)
    return plate > th.t_cp, {"cystic_plate_largest_in_roi": plate}


def assess_c3(label_map: LabelMap, roi: RoiQuad, min_cluster: int = 5,
              connectivity: int = DEFAULT_CONNECTIVITY) -> Tuple[bool, dict]:
    _check(label_map, roi)
    counts = {}
    for key, name in (("duct_clusters_in_roi", CYSTIC_DUCT), ("artery_clusters_in_roi", CYSTIC_ARTERY)):
        clusters = clusters_in_region(label_map, FUSED.id_of(name), roi, connectivity)
        counts[key] = sum(1 for c in clusters if c.size >= min_cluster)
    ok = counts["duct_clusters_in_roi"] == 1 and counts["artery_clusters_in_roi"] == 1
    return ok, counts


def assess_in_roi(label_map: LabelMap, roi: RoiQuad, cfg: AssessConfig = AssessConfig()) -> CvsAssessment:
    """Apply the three criteria to a given ROI."""
    c1, e1 = assess_c1(label_map, roi, cfg.rules, cfg.connectivity)
    c2, e2 = assess_c2(label_map, roi, cfg.rules, cfg.connectivity)
    c3, e3 = assess_c3(label_map, roi, cfg.rules.min_cluster, cfg.connectivity)
    evidence = {**e1, **e2, **e3}
    evidence = {k: evidence[k] for k in EVIDENCE_KEYS}
    return CvsAssessment(c1, c2, c3, c1 and c2 and c3, evidence, roi)


def assess_cvs(label_map: LabelMap, cfg: AssessConfig = AssessConfig(), roi: Optional[RoiQuad] = None) -> CvsAssessment:
    """Estimate the ROI (unless one is supplied) and evaluate C1-C3.

    An ROI estimation failure yields an all-false assessment that records the
    failure name instead of raising.
    """
    if roi is None:
        try:
            roi = estimate_roi(label_map, cfg.roi)
        except EstimationFailure as exc:
            return CvsAssessment(False, False, False, False, {}, None, exc.code)
    return assess_in_roi(label_map, roi, cfg)
