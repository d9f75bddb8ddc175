"""Four-point region-of-interest estimation on a fused label map.

A  midpoint between the gallbladder-side duct end and its nearest gallbladder-edge pixel
B  the other end of the main cystic-duct cluster
C  the pixel just before the first hit of a ray from B, swept clockwise from
   the direction B->A, on the outline of the largest fat cluster (liver edge if
   there is no such hit); stopping short keeps the fat pixel out of the ROI
D  midpoint of the closest gallbladder-edge / liver-edge pixel pair
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from cvsroi.errors import (
    CNotFound,
    DegenerateCluster,
    DegenerateRoi,
    DuctMissing,
    GallbladderMissing,
    InvalidRegion,
    LiverMissing,
    PaletteMismatch,
    RayMiss,
)
from cvsroi.geometry import (
    Point,
    RoiQuad,
    extend_axis_to_outline,
    make_quad,
    midpoint,
    nearest_pair,
    pca_axes,
    rotate_ray_to_target,
)
from cvsroi.label_io import CYSTIC_DUCT, FAT, FUSED, GALLBLADDER, LIVER, LabelMap
from cvsroi.regions import DEFAULT_CONNECTIVITY, EdgeSet, class_edge, largest_cluster


@dataclass(frozen=True)
class RoiConfig:
    k_edge: int = 25
    step_deg: float = 1.0
    max_sweep_deg: float = 180.0
    min_area: float = 25.0
    connectivity: int = DEFAULT_CONNECTIVITY

    def __post_init__(self):
        if self.k_edge < 2:
            raise ValueError("roi.k_edge must be >= 2")
        if not (0 < self.step_deg <= 5):
            raise ValueError("roi.step_deg must be in (0, 5]")
        if not (0 < self.max_sweep_deg <= 360):
            raise ValueError("roi.max_sweep_deg must be in (0, 360]")
        if self.min_area < 0:
            raise ValueError("roi.min_area must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


@dataclass(frozen=True)
class RoiEstimate:
    """The quad plus the intermediate points, for diagnostics and overlays."""

    quad: RoiQuad
    p1: Point
    p2: Point
    axis: Point
    c_source: str  # "fat" or "liver"
    c_sweep_deg: float


def _k_nearest(edge: EdgeSet, origin: Tuple[int, int], rel_centre: np.ndarray, k: int) -> np.ndarray:
    # distances taken relative to an integer origin so that shifts are exact
    pts = edge.points()
    d2 = ((pts[:, 0] - origin[0]) - rel_centre[0]) ** 2 + ((pts[:, 1] - origin[1]) - rel_centre[1]) ** 2
    order = np.lexsort((pts[:, 0], pts[:, 1], d2))
    return pts[order[:k]]


def _select_long_axis(duct, gb_edge: EdgeSet, k: int) -> np.ndarray:
    """Pick the duct PCA axis that is closer to perpendicular to the local gallbladder edge."""
    axes = pca_axes(duct.points())
    d1, d2 = np.array(axes.dir1), np.array(axes.dir2)
    origin = (int(duct.xs.min()), int(duct.ys.min()))
    rel = np.array([(duct.xs - origin[0]).mean(), (duct.ys - origin[1]).mean()])
    local = _k_nearest(gb_edge, origin, rel, k)
    try:
        edge_dir = np.array(pca_axes(local).dir1)
    except DegenerateCluster:
        return d1
    if abs(d2 @ edge_dir) < abs(d1 @ edge_dir):
        return d2
    return d1


def estimate_roi_details(label_map: LabelMap, cfg: Optional[RoiConfig] = None) -> RoiEstimate:
    cfg = cfg or RoiConfig()
    if label_map.palette != FUSED:
        raise PaletteMismatch(f"ROI estimation needs the fused palette, got {label_map.palette.stream}")
    duct_id = FUSED.id_of(CYSTIC_DUCT)

    duct = largest_cluster(label_map, duct_id, cfg.connectivity)
    if duct is None:
        raise DuctMissing("no cystic duct pixels")
    if duct.size < 2:
        raise DuctMissing("cystic duct cluster is a single pixel")

    gb_edge = class_edge(label_map, FUSED.id_of(GALLBLADDER))
    if len(gb_edge) == 0:
        raise GallbladderMissing("no gallbladder pixels")
    gb_pts = gb_edge.points()

    try:
        axis = _select_long_axis(duct, gb_edge, cfg.k_edge)
        ends = extend_axis_to_outline(duct, axis)
    except (DegenerateCluster, RayMiss) as exc:
        raise DuctMissing(f"cystic duct cluster unusable: {exc}") from exc

    near = [nearest_pair([e], gb_pts) for e in ends]
    if near[1][2] < near[0][2]:
        p1, p2, gb_near = ends[1], ends[0], near[1][1]
    else:
        p1, p2, gb_near = ends[0], ends[1], near[0][1]
    a = midpoint(p1, gb_near)
    b = p2
    start = (a[0] - b[0], a[1] - b[1])
    if start == (0.0, 0.0):
        raise DegenerateRoi("points A and B coincide")

    liver_edge = class_edge(label_map, FUSED.id_of(LIVER))
    hit = None
    c_source = "fat"
    fat = largest_cluster(label_map, FUSED.id_of(FAT), cfg.connectivity)
    if fat is not None:
        hit = rotate_ray_to_target(b, start, fat.boundary_points(), "clockwise", cfg.max_sweep_deg, cfg.step_deg)
    if hit is None:
        c_source = "liver"
        if len(liver_edge):
            hit = rotate_ray_to_target(b, start, liver_edge.points(), "clockwise", cfg.max_sweep_deg, cfg.step_deg)
    if hit is None:
        raise CNotFound("rotating ray met neither the main fat cluster nor the liver edge")

    if len(liver_edge) == 0:
        raise LiverMissing("no liver pixels")
    gb_pt, liver_pt, _ = nearest_pair(gb_pts, liver_edge.points())
    d = midpoint(gb_pt, liver_pt)

    try:
        c = hit.before if hit.before is not None else hit.point
        quad = make_quad(a, b, c, d)
    except InvalidRegion as exc:
        raise DegenerateRoi(str(exc)) from exc
    if quad.area < cfg.min_area:
        raise DegenerateRoi(f"ROI area {quad.area:.1f} below minimum {cfg.min_area}")
    return RoiEstimate(quad, p1, p2, (float(axis[0]), float(axis[1])), c_source, hit.angle)


def estimate_roi(label_map: LabelMap, cfg: Optional[RoiConfig] = None) -> RoiQuad:
    """Estimate the ROI quadrilateral; raises an :class:`EstimationFailure` subclass on failure."""
    return estimate_roi_details(label_map, cfg).quad
