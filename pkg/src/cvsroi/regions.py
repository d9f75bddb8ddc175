"""Connected components, cluster statistics and class-edge pixels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from cvsroi.errors import UnknownClassId
from cvsroi.geometry import RoiQuad, points_in_quad
from cvsroi.label_io import LabelMap

DEFAULT_CONNECTIVITY = 8

_STRUCTURE = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass(frozen=True, eq=False)
class Cluster:
    """One connected component of a single class.

    Pixels are held as parallel integer arrays ``xs``/``ys`` in raster order.
    """

    cls: int
    xs: np.ndarray
    ys: np.ndarray
    boundary_xs: np.ndarray = field(repr=False)
    boundary_ys: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.xs)

    @property
    def pixels(self) -> frozenset:
        return frozenset(zip(self.xs.tolist(), self.ys.tolist()))

    @property
    def boundary(self) -> List[Tuple[int, int]]:
        return list(zip(self.boundary_xs.tolist(), self.boundary_ys.tolist()))

    @property
    def centroid(self) -> Tuple[float, float]:
        x0, y0 = int(self.xs.min()), int(self.ys.min())
        return (x0 + float((self.xs - x0).mean()), y0 + float((self.ys - y0).mean()))

    @property
    def bbox(self) -> Tuple[int, int, int, int]:
        return (int(self.xs.min()), int(self.ys.min()), int(self.xs.max()), int(self.ys.max()))

    def points(self) -> np.ndarray:
        return np.column_stack([self.xs, self.ys])

    def boundary_points(self) -> np.ndarray:
        return np.column_stack([self.boundary_xs, self.boundary_ys])

    def __eq__(self, other):
        if not isinstance(other, Cluster):
            return NotImplemented
        return self.cls == other.cls and np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys)

    def __repr__(self):
        return f"Cluster(cls={self.cls}, size={self.size}, bbox={self.bbox})"


@dataclass(frozen=True, eq=False)
class EdgeSet:
    cls: int
    xs: np.ndarray
    ys: np.ndarray

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def pixels(self) -> frozenset:
        return frozenset(zip(self.xs.tolist(), self.ys.tolist()))

    def points(self) -> np.ndarray:
        return np.column_stack([self.xs, self.ys])


def inner_boundary(mask: np.ndarray) -> np.ndarray:
    """Pixels of ``mask`` with at least one 4-neighbour outside it (image border counts as outside)."""
    padded = np.pad(mask, 1, constant_values=False)
    interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return mask & ~interior


def _check_class(label_map: LabelMap, cls: int):
    if cls not in label_map.palette:
        raise UnknownClassId(f"class id {cls} not in {label_map.palette.stream} palette")


def _sort_key(c: Cluster):
    # size desc, then bbox (ymin, xmin), then first pixel in raster order
    return (-c.size, int(c.ys.min()), int(c.xs.min()), int(c.ys[0]), int(c.xs[0]))


def label_mask(mask: np.ndarray, cls: int, connectivity: int = DEFAULT_CONNECTIVITY) -> List[Cluster]:
    """Connected components of a boolean mask, sorted by the cluster ordering contract."""
    if connectivity not in _STRUCTURE:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, n = ndimage.label(mask, structure=_STRUCTURE[connectivity])
    if n == 0:
        return []
    clusters = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        sub = labels[sl] == i
        ys, xs = np.nonzero(sub)
        bys, bxs = np.nonzero(inner_boundary(sub))
        oy, ox = sl[0].start, sl[1].start
        clusters.append(Cluster(cls, xs + ox, ys + oy, bxs + ox, bys + oy))
    clusters.sort(key=_sort_key)
    return clusters


def connected_components(label_map: LabelMap, cls: int, connectivity: int = DEFAULT_CONNECTIVITY) -> List[Cluster]:
    _check_class(label_map, cls)
    return label_mask(label_map.data == cls, cls, connectivity)


def largest_cluster(label_map: LabelMap, cls: int, connectivity: int = DEFAULT_CONNECTIVITY) -> Optional[Cluster]:
    """Biggest cluster of ``cls``, or ``None`` if the class is absent."""
    if cls not in label_map.palette:
        return None
    clusters = connected_components(label_map, cls, connectivity)
    return clusters[0] if clusters else None


def class_edge(label_map: LabelMap, cls: int) -> EdgeSet:
    """Pixels of ``cls`` with a 4-neighbour of another class or on the image border."""
    if cls not in label_map.palette:
        return EdgeSet(cls, np.zeros(0, np.int64), np.zeros(0, np.int64))
    ys, xs = np.nonzero(inner_boundary(label_map.data == cls))
    return EdgeSet(cls, xs, ys)


def region_mask(region: RoiQuad, shape: Tuple[int, int]) -> np.ndarray:
    """Pixels whose centres lie in ``region``; only the quad's bbox is tested."""
    h, w = shape
    pts = np.array(region.points)
    x0 = max(int(np.floor(pts[:, 0].min())), 0)
    x1 = min(int(np.ceil(pts[:, 0].max())), w - 1)
    y0 = max(int(np.floor(pts[:, 1].min())), 0)
    y1 = min(int(np.ceil(pts[:, 1].max())), h - 1)
    out = np.zeros((h, w), dtype=bool)
    if x0 > x1 or y0 > y1:
        return out
    ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    out[y0 : y1 + 1, x0 : x1 + 1] = points_in_quad(region, xs, ys)
    return out


def clusters_in_region(
    label_map: LabelMap, cls: int, region: RoiQuad, connectivity: int = DEFAULT_CONNECTIVITY
) -> List[Cluster]:
    """Components of the class pixels clipped to the region (clip first, then label)."""
    _check_class(label_map, cls)
    mask = (label_map.data == cls) & region_mask(region, label_map.shape)
    return label_mask(mask, cls, connectivity)
