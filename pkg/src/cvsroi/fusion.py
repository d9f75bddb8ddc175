"""Two-stream merge: the anatomy stream overlaid with the fat mask of the second stream."""

from __future__ import annotations

import enum

import numpy as np

from cvsroi.errors import DimensionMismatch, PaletteMismatch
from cvsroi.label_io import BACKGROUND, FAT, FUSED, STREAM1, LabelMap


class FusionMode(enum.Enum):
    # fat only claims pixels that stream 1 left as background
    BACKGROUND_FILL = "background-fill"
    # fat wins wherever stream 2 says fat
    FAT_OVERWRITE = "fat-overwrite"


def fat_mask(p2: LabelMap) -> np.ndarray:
    if not p2.palette.has(FAT):
        raise PaletteMismatch(f"{p2.palette.stream} palette has no 'fat' class")
    return p2.data == p2.palette.id_of(FAT)


def fuse_streams(p1: LabelMap, p2: LabelMap, mode: FusionMode = FusionMode.BACKGROUND_FILL) -> LabelMap:
    """Merge stream-1 anatomy with the stream-2 fat mask into a fused-palette map.

    Stream-1 IDs are carried over unchanged (the fused palette extends the
    stream-1 palette), so every non-fat output pixel equals ``p1``.
    """
    if p1.palette != STREAM1:
        raise PaletteMismatch(f"first stream must use the Stream1 palette, got {p1.palette.stream}")
    if p1.shape != p2.shape:
        raise DimensionMismatch(f"stream sizes differ: {p1.width}x{p1.height} vs {p2.width}x{p2.height}")
    fat = fat_mask(p2)
    if mode is FusionMode.BACKGROUND_FILL:
        fat = fat & (p1.data == STREAM1.id_of(BACKGROUND))
    elif mode is not FusionMode.FAT_OVERWRITE:
        raise ValueError(f"unknown fusion mode {mode!r}")
    out = np.where(fat, FUSED.id_of(FAT), p1.data).astype(np.uint8)
    return LabelMap(out, FUSED)
