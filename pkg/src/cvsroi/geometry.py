"""Numeric geometry kernels on pixel sets.

Pixel ``(x, y)`` is the unit square centred on integer coordinates, so a real
sample point belongs to pixel ``(floor(x + 0.5), floor(y + 0.5))``. Image
coordinates have y pointing down; "clockwise" is clockwise on screen, which
rotates (1, 0) towards (0, 1).

Walks and ray marches are computed relative to an integer origin so that
translating the input by whole pixels translates the output exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from cvsroi.errors import DegenerateCluster, EmptySet, InvalidRegion, RayMiss

Point = Tuple[float, float]

MARCH_STEP = 0.5


def as_points(points) -> np.ndarray:
    """Coerce a set/list of (x, y) or an (N, 2) array into an (N, 2) float array."""
    if isinstance(points, np.ndarray):
        arr = points
    else:
        arr = np.array(sorted(points) if isinstance(points, (set, frozenset)) else list(points), dtype=float)
    arr = np.asarray(arr, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got shape {arr.shape}")
    return arr


def pixel_of(v):
    """Index of the pixel containing coordinate ``v``."""
    return np.floor(np.asarray(v) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class PcaAxes:
    center: Point
    dir1: Point
    dir2: Point
    var1: float
    var2: float


def _orient(v: np.ndarray) -> np.ndarray:
    # non-negative x; if x ~ 0 then non-negative y
    if v[0] < -1e-12 or (abs(v[0]) <= 1e-12 and v[1] < 0):
        v = -v
    return v + 0.0


def pca_axes(points) -> PcaAxes:
    """Principal axes of a 2D point set (population covariance)."""
    pts = as_points(points)
    if len(pts) < 2 or np.all(pts == pts[0]):
        raise DegenerateCluster("PCA needs at least two distinct points")
    origin = np.floor(pts.min(axis=0))
    rel = pts - origin
    mean = rel.mean(axis=0)
    centred = rel - mean
    cov = centred.T @ centred / len(pts)
    evals, evecs = np.linalg.eigh(cov)
    order = [1, 0]  # eigh sorts ascending
    d1 = _orient(evecs[:, order[0]])
    d2 = _orient(evecs[:, order[1]])
    v1, v2 = (max(float(evals[i]), 0.0) for i in order)
    center = origin + mean
    return PcaAxes((float(center[0]), float(center[1])), (float(d1[0]), float(d1[1])),
                   (float(d2[0]), float(d2[1])), v1, v2)


class AxisEndpoints(NamedTuple):
    p1: Point
    p2: Point


def _member_lookup(xs: np.ndarray, ys: np.ndarray):
    x0, y0 = int(xs.min()), int(ys.min())
    mask = np.zeros((int(ys.max()) - y0 + 1, int(xs.max()) - x0 + 1), dtype=bool)
    mask[ys - y0, xs - x0] = True
    return x0, y0, mask


def _walk(mask, start_rel, axis, sign):
    """Samples along start + sign*t*axis (t = 0, 0.5, ...) until the bbox is left.

    Returns a list of (ix, iy, inside) per sample, in bbox-relative pixel indices.
    """
    h, w = mask.shape
    tmax = math.hypot(w, h) + 1.0
    t = np.arange(0.0, tmax + MARCH_STEP, MARCH_STEP)
    ix = pixel_of(start_rel[0] + sign * t * axis[0])
    iy = pixel_of(start_rel[1] + sign * t * axis[1])
    inb = (ix >= 0) & (iy >= 0) & (ix < w) & (iy < h)
    inside = np.zeros(len(t), dtype=bool)
    inside[inb] = mask[iy[inb], ix[inb]]
    return ix, iy, inside


def _first_run(inside: np.ndarray) -> Optional[Tuple[int, int]]:
    hits = np.flatnonzero(inside)
    if len(hits) == 0:
        return None
    start = hits[0]
    gaps = np.flatnonzero(~inside[start:])
    end = start + gaps[0] - 1 if len(gaps) else len(inside) - 1
    return int(start), int(end)


def extend_axis_to_outline(cluster, axis: Sequence[float]) -> AxisEndpoints:
    """Walk from the cluster centroid along ``±axis`` to the cluster outline.

    ``cluster`` needs integer ``xs``/``ys`` pixel arrays. Each endpoint is the
    centre of the last pixel of the first run of member pixels met in that
    direction. When the centroid is outside the cluster and only one direction
    meets it, that run's entry and exit pixels are returned.
    """
    xs = np.asarray(cluster.xs, dtype=np.int64)
    ys = np.asarray(cluster.ys, dtype=np.int64)
    if len(xs) < 2:
        raise DegenerateCluster("cannot extend an axis through fewer than two pixels")
    axis = np.asarray(axis, dtype=float)
    x0, y0, mask = _member_lookup(xs, ys)
    start = np.array([(xs - x0).mean(), (ys - y0).mean()])
    ends = []
    runs = []
    for sign in (1.0, -1.0):
        ix, iy, inside = _walk(mask, start, axis, sign)
        run = _first_run(inside)
        runs.append((ix, iy, run))
        if run is not None:
            ends.append((float(ix[run[1]] + x0), float(iy[run[1]] + y0)))
    if not ends:
        raise RayMiss("axis through the centroid never meets the cluster")
    if len(ends) == 1:
        ix, iy, run = next(r for r in runs if r[2] is not None)
        entry = (float(ix[run[0]] + x0), float(iy[run[0]] + y0))
        return AxisEndpoints(entry, ends[0])
    return AxisEndpoints(ends[0], ends[1])


def nearest_pair_bruteforce(set_a, set_b):
    """O(|A|·|B|) reference for :func:`nearest_pair`."""
    a = as_points(set_a)
    b = as_points(set_b)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("nearest_pair needs two non-empty sets")
    best = None
    for ax, ay in a:
        for bx, by in b:
            key = ((ax - bx) ** 2 + (ay - by) ** 2, ay, ax, by, bx)
            if best is None or key < best:
                best = key
    d2, ay, ax, by, bx = best
    return (ax, ay), (bx, by), math.sqrt(d2)


def nearest_pair(set_a, set_b):
    """Closest pair (one point from each set) by Euclidean distance.

    Ties go to the smallest A point in (y, x) order, then the smallest B point.
    Returns ``((ax, ay), (bx, by), distance)``.
    """
    a = as_points(set_a)
    b = as_points(set_b)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("nearest_pair needs two non-empty sets")
    tree = cKDTree(b)
    dists, _ = tree.query(a, k=1)
    dmin = float(dists.min())
    slack = dmin * 1e-9 + 1e-9
    best = None
    for i in np.flatnonzero(dists <= dmin + slack):
        ax, ay = a[i]
        for j in tree.query_ball_point(a[i], dmin + slack):
            bx, by = b[j]
            key = ((ax - bx) ** 2 + (ay - by) ** 2, ay, ax, by, bx)
            if best is None or key < best:
                best = key
    d2, ay, ax, by, bx = best
    return (float(ax), float(ay)), (float(bx), float(by)), math.sqrt(d2)


class RayHit(NamedTuple):
    point: Point
    angle: float
    # centre of the last pixel sampled before the hit, None when the ray starts on the target
    before: Optional[Point] = None


def rotate_ray_to_target(
    pivot: Sequence[float],
    start_dir: Sequence[float],
    target,
    sense: str = "clockwise",
    max_sweep: float = 180.0,
    step: float = 1.0,
    march_step: float = MARCH_STEP,
) -> Optional[RayHit]:
    """Sweep a ray about ``pivot`` until it meets a pixel of ``target``.

    At each sweep angle the ray is marched outward in ``march_step`` increments
    past the far side of the target's bounding box (nothing beyond can hit).
    Returns the centre of the first target pixel met and the swept angle in
    degrees, or ``None`` when the sweep is exhausted.
    """
    if not (0 < step <= 5):
        raise ValueError(f"step must be in (0, 5], got {step}")
    if not (0 < max_sweep <= 360):
        raise ValueError(f"max_sweep must be in (0, 360], got {max_sweep}")
    if sense not in ("clockwise", "counterclockwise"):
        raise ValueError(f"unknown sense {sense!r}")
    tgt = as_points(target)
    if len(tgt) == 0:
        return None
    tx = tgt[:, 0].astype(np.int64)
    ty = tgt[:, 1].astype(np.int64)
    x0, y0, mask = _member_lookup(tx, ty)
    h, w = mask.shape

    pivot = np.asarray(pivot, dtype=float)
    ipiv = np.floor(pivot)
    frac = pivot - ipiv
    # pivot relative to the target bbox; integer so translation-exact
    px, py = int(ipiv[0]) - x0, int(ipiv[1]) - y0
    far = max(math.hypot(px - cx, py - cy) for cx in (0, w) for cy in (0, h)) + 2.0
    t = np.arange(0.0, far + march_step, march_step)

    d = np.asarray(start_dir, dtype=float)
    d = d / math.hypot(d[0], d[1])
    sgn = 1.0 if sense == "clockwise" else -1.0
    n_steps = int(math.floor(max_sweep / step + 1e-9))
    for k in range(n_steps + 1):
        ang = k * step
        phi = math.radians(sgn * ang)
        c, s = math.cos(phi), math.sin(phi)
        dx = d[0] * c - d[1] * s
        dy = d[0] * s + d[1] * c
        ix = px + pixel_of(frac[0] + t * dx)
        iy = py + pixel_of(frac[1] + t * dy)
        inb = (ix >= 0) & (iy >= 0) & (ix < w) & (iy < h)
        if not inb.any():
            continue
        hit = np.zeros(len(t), dtype=bool)
        hit[inb] = mask[iy[inb], ix[inb]]
        idx = np.flatnonzero(hit)
        if len(idx):
            i = idx[0]
            before = None
            if i > 0:
                before = (float(px + pixel_of(frac[0] + t[i - 1] * dx) + x0),
                          float(py + pixel_of(frac[1] + t[i - 1] * dy) + y0))
            return RayHit((float(ix[i] + x0), float(iy[i] + y0)), float(ang), before)
    return None


# --- quadrilaterals ---------------------------------------------------------


def polygon_area(pts: Sequence[Point]) -> float:
    """Signed shoelace area."""
    s = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return s / 2.0


def _orient3(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    o1, o2 = _orient3(p1, p2, q1), _orient3(p1, p2, q2)
    o3, o4 = _orient3(q1, q2, p1), _orient3(q1, q2, p2)
    if ((o1 > 0) != (o2 > 0)) and o1 != 0 and o2 != 0 and ((o3 > 0) != (o4 > 0)) and o3 != 0 and o4 != 0:
        return True
    if o1 == 0 and _on_segment(p1, p2, q1):
        return True
    if o2 == 0 and _on_segment(p1, p2, q2):
        return True
    if o3 == 0 and _on_segment(q1, q2, p1):
        return True
    if o4 == 0 and _on_segment(q1, q2, p2):
        return True
    return False


def is_self_intersecting(pts: Sequence[Point]) -> bool:
    """Only opposite edges of a quadrilateral can cross."""
    a, b, c, d = pts
    return segments_intersect(a, b, c, d) or segments_intersect(b, c, d, a)


@dataclass(frozen=True)
class RoiQuad:
    a: Point
    b: Point
    c: Point
    d: Point
    degenerate_fallback_used: bool = False

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            object.__setattr__(self, name, (float(v[0]), float(v[1])))
        if self.area == 0.0:
            raise InvalidRegion("quadrilateral has zero area")
        if is_self_intersecting(self.points):
            raise InvalidRegion("quadrilateral edges cross")

    @property
    def points(self) -> Tuple[Point, Point, Point, Point]:
        return (self.a, self.b, self.c, self.d)

    @property
    def area(self) -> float:
        return abs(polygon_area(self.points))

    @property
    def centroid(self) -> Point:
        """Area centroid of the polygon."""
        pts = self.points
        sa = polygon_area(pts)
        cx = cy = 0.0
        for i in range(4):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % 4]
            cr = x1 * y2 - x2 * y1
            cx += (x1 + x2) * cr
            cy += (y1 + y2) * cr
        return (cx / (6 * sa), cy / (6 * sa))

    def to_list(self):
        return [list(p) for p in self.points]

    @classmethod
    def from_list(cls, pts) -> "RoiQuad":
        return make_quad(*[tuple(p) for p in pts])

    def translated(self, dx: float, dy: float) -> "RoiQuad":
        return RoiQuad(*[(x + dx, y + dy) for x, y in self.points],
                       degenerate_fallback_used=self.degenerate_fallback_used)


def make_quad(a: Point, b: Point, c: Point, d: Point) -> RoiQuad:
    """Build a quad from A, B, C, D, reordering the vertices if the edges cross.

    Of the three distinct cyclic orders of four points, the first simple one
    (largest area on ties) is kept; for points in convex position this is the
    convex-hull order.
    """
    pts = [tuple(map(float, p)) for p in (a, b, c, d)]
    if polygon_area(pts) == 0.0 and not is_self_intersecting(pts):
        raise InvalidRegion("quadrilateral has zero area")
    if not is_self_intersecting(pts):
        return RoiQuad(*pts)
    pa, pb, pc, pd = pts
    options = [order for order in ([pa, pb, pd, pc], [pa, pc, pb, pd]) if not is_self_intersecting(order)]
    options = [o for o in options if polygon_area(o) != 0.0]
    if not options:
        raise InvalidRegion("no simple ordering of the four points")
    best = max(options, key=lambda o: abs(polygon_area(o)))
    return RoiQuad(*best, degenerate_fallback_used=True)


def points_in_quad(q: RoiQuad, xs, ys) -> np.ndarray:
    """Vectorised even-odd test; points on the boundary count as inside."""
    if not isinstance(q, RoiQuad):
        raise InvalidRegion(f"expected RoiQuad, got {type(q).__name__}")
    px = np.asarray(xs, dtype=float)
    py = np.asarray(ys, dtype=float)
    inside = np.zeros(np.broadcast(px, py).shape, dtype=bool)
    on_edge = np.zeros_like(inside)
    pts = q.points
    for i in range(4):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % 4]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_edge |= (cross == 0) & (px >= min(x1, x2)) & (px <= max(x1, x2)) & (py >= min(y1, y2)) & (py <= max(y1, y2))
        straddle = (y1 > py) != (y2 > py)
        # px < x-intercept, without dividing
        if y2 > y1:
            left = (px - x1) * (y2 - y1) < (py - y1) * (x2 - x1)
        else:
            left = (px - x1) * (y2 - y1) > (py - y1) * (x2 - x1)
        inside ^= straddle & left
    return inside | on_edge


def point_in_quad(q: RoiQuad, p: Point) -> bool:
    return bool(points_in_quad(q, p[0], p[1]))


def quad_mask(q: RoiQuad, shape: Tuple[int, int]) -> np.ndarray:
    """Boolean (H, W) mask of pixels whose centres lie in the quad."""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    return points_in_quad(q, xs, ys)


def midpoint(p: Point, q: Point) -> Point:
    return ((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0)


def segment_distance(p: Point, q: Point, xs, ys) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    dx, dy = q[0] - p[0], q[1] - p[1]
    den = dx * dx + dy * dy
    t = np.zeros_like(xs) if den == 0 else np.clip(((xs - p[0]) * dx + (ys - p[1]) * dy) / den, 0.0, 1.0)
    return np.hypot(xs - p[0] - t * dx, ys - p[1] - t * dy)


def quad_outline_mask(q: RoiQuad, shape: Tuple[int, int], width: float = 0.5) -> np.ndarray:
    """Pixels whose centres lie within ``width`` of a quad edge."""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    out = np.zeros(shape, dtype=bool)
    pts = q.points
    for i in range(4):
        out |= segment_distance(pts[i], pts[(i + 1) % 4], xs, ys) <= width
    return out
