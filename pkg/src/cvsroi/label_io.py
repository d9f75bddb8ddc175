"""Label-map data model and bit-exact PGM (P5) I/O.

A label map is stored as a binary PGM whose pixel values are class IDs, plus a
JSON sidecar ``<path>.palette.json`` naming the classes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from cvsroi.errors import (
    InvariantViolation,
    IoFailure,
    MalformedPgm,
    MissingFile,
    PaletteMismatch,
    UnknownClassId,
)

PathLike = Union[str, os.PathLike]

MAX_SIDE = 4096
STREAMS = ("Stream1", "Stream2", "Fused")

# class names used throughout the pipeline
BACKGROUND = "background"
CYSTIC_ARTERY = "cystic_artery"
CYSTIC_DUCT = "cystic_duct"
GALLBLADDER = "gallbladder"
LIVER = "liver"
INSTRUMENT = "instrument"
CYSTIC_PLATE = "cystic_plate"
FAT = "fat"


@dataclass(frozen=True)
class ClassEntry:
    id: int
    name: str
    rgb: Tuple[int, int, int]


@dataclass(frozen=True)
class ClassPalette:
    entries: Tuple[ClassEntry, ...]
    stream: str

    def __post_init__(self):
        if self.stream not in STREAMS:
            raise PaletteMismatch(f"unknown stream tag {self.stream!r}")
        ids = [e.id for e in self.entries]
        if ids != list(range(len(ids))) or not ids:
            raise PaletteMismatch(f"class ids must be contiguous from 0, got {ids}")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise PaletteMismatch(f"duplicate class names in {names}")
        if ids[-1] > 255:
            raise PaletteMismatch("class ids must fit in one byte")
        if self.stream == "Stream2" and FAT not in names:
            raise PaletteMismatch("Stream2 palette must contain a 'fat' class")

    @classmethod
    def from_names(cls, names: Sequence[str], stream: str, rgbs=None) -> "ClassPalette":
        rgbs = rgbs or [_DEFAULT_RGB.get(n, (128, 128, 128)) for n in names]
        entries = tuple(ClassEntry(i, n, tuple(int(v) for v in rgb)) for i, (n, rgb) in enumerate(zip(names, rgbs)))
        return cls(entries, stream)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, cls_id) -> bool:
        return isinstance(cls_id, (int, np.integer)) and 0 <= int(cls_id) < len(self.entries)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def id_of(self, name: str) -> int:
        for e in self.entries:
            if e.name == name:
                return e.id
        raise UnknownClassId(f"class {name!r} not in {self.stream} palette")

    def has(self, name: str) -> bool:
        return name in self.names

    def to_json(self) -> dict:
        return {
            "stream": self.stream,
            "classes": [{"id": e.id, "name": e.name, "rgb": list(e.rgb)} for e in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClassPalette":
        try:
            classes = sorted(obj["classes"], key=lambda c: c["id"])
            entries = tuple(
                ClassEntry(int(c["id"]), str(c["name"]), tuple(int(v) for v in c["rgb"])) for c in classes
            )
            return cls(entries, obj["stream"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PaletteMismatch(f"malformed palette: {exc}") from exc


_DEFAULT_RGB = {
    BACKGROUND: (0, 0, 0),
    CYSTIC_ARTERY: (255, 0, 0),
    CYSTIC_DUCT: (0, 255, 0),
    GALLBLADDER: (255, 255, 0),
    LIVER: (128, 0, 64),
    INSTRUMENT: (160, 160, 160),
    CYSTIC_PLATE: (0, 128, 255),
    FAT: (255, 200, 120),
}

_STREAM1_NAMES = (BACKGROUND, CYSTIC_ARTERY, CYSTIC_DUCT, GALLBLADDER, LIVER, INSTRUMENT, CYSTIC_PLATE)

STREAM1 = ClassPalette.from_names(_STREAM1_NAMES, "Stream1")
STREAM2 = ClassPalette.from_names((BACKGROUND, FAT), "Stream2")
FUSED = ClassPalette.from_names(_STREAM1_NAMES + (FAT,), "Fused")


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Immutable raster of class IDs indexed ``data[y, x]`` (origin top-left)."""

    data: np.ndarray
    palette: ClassPalette

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise InvariantViolation(f"label map must be 2D, got shape {arr.shape}")
        h, w = arr.shape
        if not (1 <= w <= MAX_SIDE and 1 <= h <= MAX_SIDE):
            raise InvariantViolation(f"label map size {w}x{h} outside 1..{MAX_SIDE}")
        if arr.size and (arr.min() < 0 or arr.max() >= len(self.palette)):
            bad = int(arr.max()) if arr.max() >= len(self.palette) else int(arr.min())
            raise InvariantViolation(f"class id {bad} not in {self.palette.stream} palette")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    def __getitem__(self, xy):
        x, y = xy
        return int(self.data[y, x])

    def class_id(self, name: str) -> int:
        return self.palette.id_of(name)

    def replace(self, data=None, palette=None) -> "LabelMap":
        return LabelMap(self.data if data is None else data, self.palette if palette is None else palette)

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.palette == other.palette and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.palette, self.data.tobytes()))

    def __repr__(self):
        return f"LabelMap({self.width}x{self.height}, {self.palette.stream})"


def palette_path(path: PathLike) -> Path:
    return Path(str(path) + ".palette.json")


def encode_pgm(data: np.ndarray) -> bytes:
    h, w = data.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(data, dtype=np.uint8).tobytes()


def decode_pgm(raw: bytes) -> np.ndarray:
    """Parse a binary P5 PGM with maxval 255. Header comments are allowed."""
    if raw[:2] != b"P5":
        raise MalformedPgm(f"bad magic {raw[:2]!r}, expected b'P5'")
    fields = []
    pos = 2
    n = len(raw)
    while len(fields) < 3:
        while pos < n and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < n and raw[pos : pos + 1] == b"#":
            while pos < n and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and raw[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise MalformedPgm("truncated or non-numeric PGM header")
        fields.append(int(raw[start:pos]))
    if pos >= n or not raw[pos : pos + 1].isspace():
        raise MalformedPgm("missing whitespace after maxval")
    pos += 1
    w, h, maxval = fields
    if maxval != 255:
        raise MalformedPgm(f"maxval must be 255, got {maxval}")
    if not (1 <= w <= MAX_SIDE and 1 <= h <= MAX_SIDE):
        raise MalformedPgm(f"dimensions {w}x{h} outside 1..{MAX_SIDE}")
    body = raw[pos:]
    if len(body) != w * h:
        raise MalformedPgm(f"expected {w * h} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def load_label_map(path: PathLike, expect: Optional[ClassPalette] = None) -> LabelMap:
    """Read a label map and its palette sidecar.

    If ``expect`` is given, the sidecar palette must equal it.
    """
    path = Path(path)
    side = palette_path(path)
    for p in (path, side):
        if not p.is_file():
            raise MissingFile(f"{p} does not exist")
    data = decode_pgm(path.read_bytes())
    try:
        palette = ClassPalette.from_json(json.loads(side.read_text()))
    except json.JSONDecodeError as exc:
        raise PaletteMismatch(f"{side}: {exc}") from exc
    if expect is not None and palette != expect:
        raise PaletteMismatch(f"{path}: palette {palette.stream} does not match expected {expect.stream}")
    if data.max() >= len(palette):
        raise UnknownClassId(f"{path}: pixel value {int(data.max())} not in {palette.stream} palette")
    return LabelMap(data, palette)


def save_label_map(label_map: LabelMap, path: PathLike) -> None:
    if label_map.data.max() >= len(label_map.palette):
        raise InvariantViolation("label map holds ids outside its palette")
    path = Path(path)
    try:
        path.write_bytes(encode_pgm(label_map.data))
        palette_path(path).write_text(json.dumps(label_map.palette.to_json()) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_pgm(data: np.ndarray, path: PathLike) -> None:
    """Write a bare PGM without palette (used for overlays)."""
    try:
        Path(path).write_bytes(encode_pgm(data))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def class_mask(label_map: LabelMap, cls: int) -> np.ndarray:
    """Boolean mask, True where the map equals ``cls``."""
    if cls not in label_map.palette:
        raise UnknownClassId(f"class id {cls} not in {label_map.palette.stream} palette")
    return label_map.data == cls


def make_label_map(rows: Iterable[Iterable[int]], palette: ClassPalette = FUSED) -> LabelMap:
    """Convenience constructor from nested lists, mostly for tests."""
    return LabelMap(np.array(list(map(list, rows)), dtype=np.int64), palette)
