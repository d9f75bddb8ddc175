"""Deterministic synthetic fused label maps with known ROI and CVS labels.

Scene layout (image coordinates, y down)::

    +-------------------+
    |    gallbladder    |                 liver: half-plane below a line through a
    +--+----------------+ D               point ``gap`` px under the gallbladder's
       |d  a                  ....liver   bottom-right corner, rising to the right
       |u  r    plate      C +------+
       |c  t               |  fat   |
       |t                  +------+
       B

Randomness comes from ``Lcg64`` (version ``lcg64-v1``): a 64-bit linear
congruential generator ``s <- (6364136223846793005 * s + 1442695040888963407)
mod 2**64`` whose top 53 bits give a float in [0, 1). Per-frame seeds are
``splitmix64(base_seed + index * 0x9E3779B97F4A7C15)``. Both are spelled out
here so corpora can be regenerated bit-for-bit in any language.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cvsroi.errors import InvalidSpec, IoFailure
from cvsroi.geometry import RoiQuad, make_quad, points_in_quad
from cvsroi.label_io import (
    BACKGROUND,
    CYSTIC_ARTERY,
    CYSTIC_DUCT,
    CYSTIC_PLATE,
    FAT,
    FUSED,
    GALLBLADDER,
    LIVER,
    LabelMap,
    save_label_map,
)

RNG_VERSION = "lcg64-v1"
_MASK64 = (1 << 64) - 1
LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    return splitmix64((base_seed + index * GOLDEN) & _MASK64)


class Lcg64:
    """64-bit LCG; see module docstring for the constants."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (LCG_MULT * self.state + LCG_INC) & _MASK64
        return self.state

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], both inclusive."""
        return lo + int(self.random() * (hi - lo + 1))

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]


# --- scene description --------------------------------------------------------


@dataclass(frozen=True)
class Rect:
    """Pixel-inclusive axis-aligned rectangle."""

    x0: int
    y0: int
    x1: int
    y1: int


@dataclass(frozen=True)
class Strip:
    """Oriented rectangle hanging from ``top``; ``angle`` is degrees from straight down (positive leans right)."""

    top: Tuple[float, float]
    length: float
    thickness: float
    angle: float

    @property
    def direction(self) -> Tuple[float, float]:
        a = math.radians(self.angle)
        return (math.sin(a), math.cos(a))

    @property
    def bottom(self) -> Tuple[float, float]:
        ux, uy = self.direction
        return (self.top[0] + self.length * ux, self.top[1] + self.length * uy)


@dataclass(frozen=True)
class Disk:
    center: Tuple[int, int]
    radius: float


@dataclass(frozen=True)
class FatBlob:
    center: Tuple[int, int]
    radius: float
    inside_roi: bool


@dataclass(frozen=True)
class Blob:
    """Compact blob of exactly ``size`` pixels grown around ``center``."""

    center: Tuple[int, int]
    size: int


@dataclass(frozen=True)
class LiverBand:
    """Liver = pixels with ``y >= corner_y + gap + slope * (corner_x - x)``, anchored at the gallbladder's bottom-right pixel."""

    gap: int
    slope: float


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    size: Tuple[int, int] = (256, 256)
    gallbladder: Rect = Rect(30, 30, 180, 70)
    duct: Strip = Strip((80.0, 70.5), 80.0, 8.0, 0.0)
    artery: Optional[Strip] = Strip((108.0, 78.0), 40.0, 5.0, 0.0)
    liver: LiverBand = LiverBand(8, 0.3)
    plate: Optional[Blob] = Blob((150, 105), 300)
    fat_main: Optional[Rect] = Rect(190, 120, 230, 160)
    fat_blobs: Tuple[FatBlob, ...] = ()
    extra_arteries: Tuple[Strip, ...] = ()
    extra_ducts: Tuple[Disk, ...] = ()
    noise_specks: Tuple[int, int] = (0, 4)  # (count, max size)


@dataclass(frozen=True)
class Scene:
    label_map: LabelMap
    truth: Dict[str, bool]
    reference_quad: RoiQuad
    spec: SceneSpec

    def truth_json(self) -> dict:
        return {**self.truth, "quad": self.reference_quad.to_list()}


# --- rasterisation -------------------------------------------------------------


@functools.lru_cache(maxsize=8)
def _grid(shape):
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    xs.flags.writeable = False
    ys.flags.writeable = False
    return xs, ys


def _strip_mask(s: Strip, shape, clip_y: Optional[float] = None, overshoot: float = 0.0) -> np.ndarray:
    xs, ys = _grid(shape)
    ux, uy = s.direction
    rx, ry = xs - s.top[0], ys - s.top[1]
    along = rx * ux + ry * uy
    across = rx * uy - ry * ux
    m = (along >= -overshoot) & (along <= s.length) & (np.abs(across) <= s.thickness / 2)
    if clip_y is not None:
        m &= ys >= clip_y
    return m


def _disk_mask(center, radius, shape) -> np.ndarray:
    xs, ys = _grid(shape)
    return (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius * radius


def _blob_mask(b: Blob, shape) -> np.ndarray:
    """The ``size`` pixels nearest to the centre, ties in (y, x) order."""
    h, w = shape
    r = int(math.ceil(math.sqrt(b.size / math.pi))) + 2
    cx, cy = b.center
    cand = [
        ((x - cx) ** 2 + (y - cy) ** 2, y, x)
        for y in range(max(cy - r, 0), min(cy + r + 1, h))
        for x in range(max(cx - r, 0), min(cx + r + 1, w))
    ]
    cand.sort()
    if len(cand) < b.size:
        raise InvalidSpec("plate blob does not fit in the image")
    m = np.zeros(shape, dtype=bool)
    for _, y, x in cand[: b.size]:
        m[y, x] = True
    return m


def _rect_mask(r: Rect, shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    m[max(r.y0, 0) : r.y1 + 1, max(r.x0, 0) : r.x1 + 1] = True
    return m


def _liver_mask(spec: SceneSpec, shape) -> np.ndarray:
    xs, ys = _grid(shape)
    g = spec.gallbladder
    return ys >= g.y1 + spec.liver.gap + spec.liver.slope * (g.x1 - xs)


def _cw_angle(ref, v) -> float:
    """Clockwise (screen) angle in [0, 360) from ``ref`` to ``v``."""
    a = math.degrees(math.atan2(v[1], v[0]) - math.atan2(ref[1], ref[0]))
    return a % 360.0


def reference_points(spec: SceneSpec):
    """Analytic A, B, C, D for a spec."""
    g = spec.gallbladder
    a = (spec.duct.top[0], float(g.y1) + 0.5)
    b = spec.duct.bottom
    start = (a[0] - b[0], a[1] - b[1])
    f = spec.fat_main
    if f is None:
        raise InvalidSpec("reference quad needs a main fat rectangle")
    corners = [(f.x0 - 0.5, f.y0 - 0.5), (f.x1 + 0.5, f.y0 - 0.5), (f.x1 + 0.5, f.y1 + 0.5), (f.x0 - 0.5, f.y1 + 0.5)]
    c = min(corners, key=lambda p: _cw_angle(start, (p[0] - b[0], p[1] - b[1])))
    s = spec.liver.slope
    k = spec.liver.gap / (2 * (1 + s * s))
    d = (g.x1 + s * k, g.y1 + k)
    return a, b, c, d


def _edge_distance(quad: RoiQuad, x, y) -> np.ndarray:
    """Distance from points to the nearest quad edge."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    best = np.full(x.shape, np.inf)
    pts = quad.points
    for i in range(4):
        (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % 4]
        dx, dy = x2 - x1, y2 - y1
        t = np.clip(((x - x1) * dx + (y - y1) * dy) / (dx * dx + dy * dy), 0, 1)
        best = np.minimum(best, np.hypot(x - x1 - t * dx, y - y1 - t * dy))
    return best


def _inside_with_margin(quad: RoiQuad, mask: np.ndarray, margin: float) -> bool:
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return True
    return bool(points_in_quad(quad, xs, ys).all() and (_edge_distance(quad, xs, ys) >= margin).all())


def _outside_with_margin(quad: RoiQuad, mask: np.ndarray, margin: float) -> bool:
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return True
    return bool((~points_in_quad(quad, xs, ys)).all() and (_edge_distance(quad, xs, ys) >= margin).all())


def _is_convex(pts) -> bool:
    signs = []
    for i in range(4):
        (x1, y1), (x2, y2), (x3, y3) = pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]
        signs.append((x2 - x1) * (y3 - y2) - (y2 - y1) * (x3 - x2) > 0)
    return all(signs) or not any(signs)


def _dilate(mask: np.ndarray, r: int) -> np.ndarray:
    out = mask.copy()
    for _ in range(r):
        p = np.pad(out, 1)
        out = out | p[:-2, 1:-1] | p[2:, 1:-1] | p[1:-1, :-2] | p[1:-1, 2:] | p[:-2, :-2] | p[2:, 2:] | p[:-2, 2:] | p[2:, :-2]
    return out


MARGIN = 4.0


def generate_scene(spec: SceneSpec) -> Scene:
    """Rasterise a spec into a fused label map with construction-derived CVS labels.

    Truth: c1 iff no fat blob lies inside the reference quad (the liver always
    fills the quad well beyond 100 px); c2 iff the plate has more than 100
    pixels; c3 iff the quad holds exactly one artery and one duct cluster.
    """
    w, h = spec.size
    shape = (h, w)
    g = spec.gallbladder
    if not (0 <= g.x0 < g.x1 < w and 0 <= g.y0 < g.y1 < h):
        raise InvalidSpec("gallbladder outside the image")
    a, b, c, d = reference_points(spec)
    pts = (a, b, c, d)
    if not all(0 <= p[0] < w and 0 <= p[1] < h for p in pts):
        raise InvalidSpec("reference quad leaves the image")
    if not _is_convex(pts):
        raise InvalidSpec("reference quad is not convex")
    quad = make_quad(a, b, c, d)
    if quad.degenerate_fallback_used:
        raise InvalidSpec("reference quad is self-intersecting")

    ids = {n: FUSED.id_of(n) for n in FUSED.names}
    data = np.full(shape, ids[BACKGROUND], dtype=np.uint8)
    data[_liver_mask(spec, shape)] = ids[LIVER]
    data[_rect_mask(g, shape)] = ids[GALLBLADDER]

    plate_size = 0
    plate = np.zeros(shape, bool)
    if spec.plate is not None and spec.plate.size > 0:
        plate = _blob_mask(spec.plate, shape)
        if not _inside_with_margin(quad, plate, MARGIN):
            raise InvalidSpec("plate must lie inside the reference quad")
        data[plate] = ids[CYSTIC_PLATE]
        plate_size = spec.plate.size

    fat = np.zeros(shape, bool)
    if spec.fat_main is not None:
        main = _rect_mask(spec.fat_main, shape)
        if not _outside_with_margin(quad, main, 0.5):
            raise InvalidSpec("main fat rectangle must lie outside the reference quad")
        fat |= main
    fat_inside = False
    for blob in spec.fat_blobs:
        m = _disk_mask(blob.center, blob.radius, shape)
        if blob.inside_roi:
            if not _inside_with_margin(quad, m, MARGIN):
                raise InvalidSpec("fat blob flagged inside_roi is not inside the quad")
            fat_inside = True
        elif not _outside_with_margin(quad, m, MARGIN):
            raise InvalidSpec("fat blob flagged outside the ROI touches the quad")
        if (m & _dilate(plate, 2)).any():
            raise InvalidSpec("fat blob overlaps the plate")
        fat |= m
    if spec.fat_main is not None and any(
        _disk_mask(bl.center, bl.radius, shape).sum() >= _rect_mask(spec.fat_main, shape).sum() for bl in spec.fat_blobs
    ):
        raise InvalidSpec("fat blobs must be smaller than the main fat rectangle")
    data[fat] = ids[FAT]

    # the duct starts slightly inside the gallbladder and is cut flush with its bottom row
    duct = _strip_mask(spec.duct, shape, clip_y=g.y1 + 1, overshoot=spec.duct.thickness)
    for extra in spec.extra_ducts:
        m = _disk_mask(extra.center, extra.radius, shape)
        if not _inside_with_margin(quad, m, MARGIN) or (_dilate(m, 2) & duct).any():
            raise InvalidSpec("extra duct blob must be inside the quad and apart from the duct")
        if m.sum() < 5 or m.sum() >= duct.sum():
            raise InvalidSpec("extra duct blob must have 5 pixels and be smaller than the duct")
        duct |= m
    data[duct] = ids[CYSTIC_DUCT]

    arteries = [s for s in ((spec.artery,) if spec.artery else ()) + tuple(spec.extra_arteries)]
    artery = np.zeros(shape, bool)
    for s in arteries:
        m = _strip_mask(s, shape, clip_y=g.y1 + 1)
        if not _inside_with_margin(quad, m, MARGIN):
            raise InvalidSpec("artery must lie inside the reference quad")
        if (_dilate(m, 2) & (artery | duct | plate | fat)).any():
            raise InvalidSpec("artery touches another structure")
        artery |= m
    data[artery] = ids[CYSTIC_ARTERY]

    _paint_specks(data, spec, quad, ids)

    truth = {
        "c1": not fat_inside,
        "c2": plate_size > 100,
        "c3": len(arteries) == 1 and not spec.extra_ducts,
    }
    truth["cvs"] = truth["c1"] and truth["c2"] and truth["c3"]
    return Scene(LabelMap(data, FUSED), truth, quad, spec)


def _paint_specks(data: np.ndarray, spec: SceneSpec, quad: RoiQuad, ids) -> None:
    """Tiny artery/duct specks below the C3 noise floor, kept apart from every structure."""
    count, max_size = spec.noise_specks
    if count <= 0:
        return
    max_size = min(max_size, 4)
    rng = Lcg64(derive_seed(spec.seed, 0x5EC))
    h, w = data.shape
    free = (data == ids[LIVER]) | (data == ids[BACKGROUND])
    blocked = _dilate(~free, 3)
    g = spec.gallbladder
    corner_zone = _disk_mask((g.x1, g.y1), spec.liver.gap + 12, data.shape)
    pts = np.array(quad.points)
    x0, x1 = int(pts[:, 0].min()), int(pts[:, 0].max())
    y0, y1 = int(pts[:, 1].min()), int(pts[:, 1].max())
    placed = 0
    for _ in range(200):
        if placed == count:
            break
        cx, cy = rng.randint(x0, x1), rng.randint(y0, y1)
        size = rng.randint(1, max_size)
        cells = [(cx, cy), (cx + 1, cy), (cx, cy + 1), (cx + 1, cy + 1)][:size]
        if any(not (0 <= x < w and 0 <= y < h) for x, y in cells):
            continue
        xs = np.array([x for x, _ in cells])
        ys = np.array([y for _, y in cells])
        if blocked[ys, xs].any() or corner_zone[ys, xs].any():
            continue
        if not (points_in_quad(quad, xs, ys).all() and (_edge_distance(quad, xs, ys) >= MARGIN).all()):
            continue
        cls = ids[CYSTIC_ARTERY] if rng.random() < 0.5 else ids[CYSTIC_DUCT]
        data[ys, xs] = cls
        speck = np.zeros(data.shape, bool)
        speck[ys, xs] = True
        blocked |= _dilate(speck, 3)
        placed += 1


# --- random specs ----------------------------------------------------------------

NEGATIVE_KINDS = ("fat_in_roi", "small_plate", "no_plate", "no_artery", "two_arteries", "extra_duct")


def canonical_spec(seed: int = 0) -> SceneSpec:
    """Hand-placed positive scene (plate of 300 px, no fat in the ROI)."""
    return SceneSpec(seed=seed)


def _free_spot(rng: Lcg64, quad: RoiQuad, radius: float, occupied: np.ndarray, shape, avoid_center, avoid_r):
    pts = np.array(quad.points)
    x0, x1 = int(pts[:, 0].min()), int(pts[:, 0].max())
    y0, y1 = int(pts[:, 1].min()), int(pts[:, 1].max())
    for _ in range(300):
        c = (rng.randint(x0, x1), rng.randint(y0, y1))
        m = _disk_mask(c, radius, shape)
        if not _inside_with_margin(quad, m, MARGIN + 1):
            continue
        if (m & occupied).any():
            continue
        if math.hypot(c[0] - avoid_center[0], c[1] - avoid_center[1]) < avoid_r + radius:
            continue
        return c
    return None


def random_spec(seed: int, kind: str = "positive", size=(256, 256)) -> SceneSpec:
    """Sample a valid spec of the requested kind (``positive`` or one of NEGATIVE_KINDS)."""
    if kind != "positive" and kind not in NEGATIVE_KINDS:
        raise InvalidSpec(f"unknown scene kind {kind!r}")
    rng = Lcg64(seed)
    w, h = size
    shape = (h, w)
    for _ in range(200):
        ox, oy = rng.randint(0, 30), rng.randint(0, 30)
        gx0, gy0 = ox + 10, oy + 15
        gx1, gy1 = gx0 + rng.randint(130, 150), gy0 + rng.randint(30, 45)
        gap = rng.randint(7, 10)
        slope = rng.uniform(0.25, 0.4)
        dx = gx0 + rng.randint(35, 50)
        dangle = rng.uniform(-12.0, 12.0)
        dlen = float(rng.randint(70, 90))
        duct = Strip((float(dx), gy1 + 0.5), dlen, float(rng.randint(6, 9)), dangle)
        bx, by = duct.bottom
        fw, fh = rng.randint(32, 45), rng.randint(32, 45)
        fx0 = gx1 + rng.randint(4, 12)
        fy0 = int(by) - rng.randint(15, 35)
        fat_main = Rect(fx0, fy0, fx0 + fw, fy0 + fh)
        atop = (float(dx + rng.randint(24, 34)), float(gy1 + rng.randint(4, 7)))
        artery = Strip(atop, float(rng.randint(30, 45)), float(rng.randint(4, 5)), dangle + rng.uniform(-6, 6))
        base = SceneSpec(
            seed=seed,
            size=size,
            gallbladder=Rect(gx0, gy0, gx1, gy1),
            duct=duct,
            artery=artery,
            liver=LiverBand(gap, slope),
            plate=None,
            fat_main=fat_main,
            noise_specks=(rng.randint(0, 3), 4),
        )
        try:
            a, b, c, d = reference_points(base)
            if not _is_convex((a, b, c, d)) or fat_main.x1 >= w or fat_main.y1 >= h:
                continue
            quad = make_quad(a, b, c, d)
        except Exception:
            continue
        if quad.degenerate_fallback_used:
            continue
        occupied = _dilate(
            _strip_mask(duct, shape, gy1 + 1, duct.thickness) | _strip_mask(artery, shape, gy1 + 1) | _rect_mask(base.gallbladder, shape), 3
        )
        plate_size = rng.randint(150, 400)
        if kind == "small_plate":
            plate_size = rng.randint(20, 100)
        corner = (gx1, gy1)
        spot = _free_spot(rng, quad, math.sqrt(plate_size / math.pi) + 1, occupied, shape, corner, gap + 12)
        if spot is None:
            continue
        plate = None if kind == "no_plate" else Blob(spot, plate_size)
        if plate is not None:
            occupied |= _dilate(_blob_mask(plate, shape), 4)
        spec = replace(base, plate=plate)
        if kind == "fat_in_roi":
            r = float(rng.randint(3, 8))
            spot = _free_spot(rng, quad, r, occupied, shape, corner, gap + 12)
            if spot is None:
                continue
            spec = replace(spec, fat_blobs=(FatBlob(spot, r, True),))
        elif kind == "no_artery":
            spec = replace(spec, artery=None)
        elif kind == "two_arteries":
            second = Strip((atop[0] + rng.randint(9, 14), atop[1] + 2), artery.length * 0.7, 4.0, artery.angle)
            spec = replace(spec, extra_arteries=(second,))
        elif kind == "extra_duct":
            r = float(rng.randint(2, 4))
            spot = _free_spot(rng, quad, r, occupied, shape, corner, gap + 12)
            if spot is None:
                continue
            spec = replace(spec, extra_ducts=(Disk(spot, r),))
        try:
            generate_scene(spec)
        except InvalidSpec:
            continue
        return spec
    raise InvalidSpec(f"could not sample a valid {kind} scene for seed {seed}")


def random_scene(seed: int, kind: Optional[str] = None, size=(256, 256)) -> Scene:
    if kind is None:
        kind = Lcg64(seed ^ 0xC0FFEE).choice(("positive",) + NEGATIVE_KINDS)
    return generate_scene(random_spec(seed, kind, size))


# --- noise and corpora ----------------------------------------------------------------


def flip_pixels(label_map: LabelMap, rate: float, seed: int) -> LabelMap:
    """Replace each pixel with probability ``rate`` by a different class drawn uniformly."""
    if not (0.0 <= rate <= 1.0):
        raise InvalidSpec("flip rate must be in [0, 1]")
    if rate == 0.0:
        return label_map
    rng = Lcg64(seed)
    data = label_map.data.copy()
    n_cls = len(label_map.palette)
    flat = data.reshape(-1)
    for i in range(flat.size):
        if rng.random() < rate:
            new = rng.randint(0, n_cls - 2)
            flat[i] = new if new < flat[i] else new + 1
    return LabelMap(data, label_map.palette)


def corpus_plan(n: int, base_seed: int, positive_fraction: float) -> List[str]:
    """Scene kind for each frame: exactly round(n * fraction) positives, positions shuffled."""
    if n < 1:
        raise InvalidSpec("corpus needs at least one frame")
    if not (0.0 <= positive_fraction <= 1.0):
        raise InvalidSpec("positive fraction must be in [0, 1]")
    n_pos = int(math.floor(n * positive_fraction + 0.5))
    rng = Lcg64(derive_seed(base_seed, 0xC0))
    kinds = ["positive"] * n_pos + [rng.choice(NEGATIVE_KINDS) for _ in range(n - n_pos)]
    rng.shuffle(kinds)
    return kinds


def frame_name(i: int) -> str:
    return f"frame_{i:04d}"


def generate_frame(base_seed: int, index: int, kind: str, flip_rate: float = 0.0) -> Scene:
    seed = derive_seed(base_seed, index)
    scene = generate_scene(random_spec(seed, kind))
    if flip_rate > 0:
        noisy = flip_pixels(scene.label_map, flip_rate, derive_seed(seed, 0xF1))
        scene = Scene(noisy, scene.truth, scene.reference_quad, scene.spec)
    return scene


def write_frame(scene: Scene, out_dir: Path, name: str) -> None:
    save_label_map(scene.label_map, out_dir / f"{name}.pgm")
    try:
        (out_dir / f"{name}.truth.json").write_text(json.dumps(scene.truth_json()) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write truth for {name}: {exc}") from exc


def generate_corpus(n: int, base_seed: int, positive_fraction: float, out_dir=None,
                    flip_rate: float = 0.0) -> List[Scene]:
    """Generate ``n`` frames; if ``out_dir`` is given, write PGM + palette + truth JSON per frame."""
    kinds = corpus_plan(n, base_seed, positive_fraction)
    scenes = [generate_frame(base_seed, i, k, flip_rate) for i, k in enumerate(kinds)]
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create {out}: {exc}") from exc
        for i, s in enumerate(scenes):
            write_frame(s, out, frame_name(i))
    return scenes
