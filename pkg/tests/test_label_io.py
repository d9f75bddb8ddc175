import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cvsroi.errors import InvariantViolation, MalformedPgm, MissingFile, PaletteMismatch, UnknownClassId
from cvsroi.label_io import (
    FUSED,
    STREAM1,
    STREAM2,
    ClassPalette,
    LabelMap,
    class_mask,
    decode_pgm,
    encode_pgm,
    load_label_map,
    make_label_map,
    palette_path,
    save_label_map,
)


def write_raw(path, raw: bytes, palette=STREAM1):
    path.write_bytes(raw)
    palette_path(path).write_text(json.dumps(palette.to_json()))


def test_all_zero_pgm_loads_as_background(tmp_path):
    p = tmp_path / "bg.pgm"
    write_raw(p, b"P5\n2 2\n255\n\x00\x00\x00\x00")
    m = load_label_map(p, expect=STREAM1)
    assert m.shape == (2, 2)
    assert (m.data == 0).all()


def test_unknown_pixel_value_rejected(tmp_path):
    p = tmp_path / "bad.pgm"
    write_raw(p, b"P5\n2 1\n255\n\x00\x09")
    with pytest.raises(UnknownClassId):
        load_label_map(p)


def test_save_writes_header_then_raw_bytes(tmp_path):
    p = tmp_path / "a.pgm"
    save_label_map(make_label_map([[0, 0], [0, 0]], STREAM1), p)
    assert p.read_bytes() == b"P5\n2 2\n255\n" + bytes(4)


def test_save_is_byte_stable(tmp_path):
    m = make_label_map([[0, 3, 4], [7, 1, 2]])
    save_label_map(m, tmp_path / "a.pgm")
    save_label_map(m, tmp_path / "b.pgm")
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()
    assert palette_path(tmp_path / "a.pgm").read_text() == palette_path(tmp_path / "b.pgm").read_text()


def test_out_of_palette_id_never_reaches_disk():
    with pytest.raises(InvariantViolation):
        make_label_map([[7]], STREAM1)


def test_header_comments_are_skipped():
    data = decode_pgm(b"P5\n# made by hand\n3 1\n# another\n255\n\x01\x02\x03")
    assert data.tolist() == [[1, 2, 3]]


@pytest.mark.parametrize(
    "raw",
    [
        b"P2\n1 1\n255\n\x00",  # ascii variant
        b"P5\n2 2\n255\n\x00",  # truncated body
        b"P5\n1 1\n65535\n\x00\x00",  # 16-bit
        b"P5\n5000 1\n255\n",  # too wide
        b"P5\n1\n",
    ],
)
def test_malformed_pgm(raw):
    with pytest.raises(MalformedPgm):
        decode_pgm(raw)


def test_missing_sidecar(tmp_path):
    p = tmp_path / "x.pgm"
    p.write_bytes(encode_pgm(np.zeros((1, 1), np.uint8)))
    with pytest.raises(MissingFile):
        load_label_map(p)


def test_expected_palette_enforced(tmp_path):
    p = tmp_path / "x.pgm"
    save_label_map(make_label_map([[0, 1]], STREAM2), p)
    with pytest.raises(PaletteMismatch):
        load_label_map(p, expect=STREAM1)


def test_stream2_needs_fat():
    with pytest.raises(PaletteMismatch):
        ClassPalette.from_names(("background", "smoke"), "Stream2")


def test_palette_ids_contiguous():
    with pytest.raises(PaletteMismatch):
        ClassPalette.from_json({"stream": "Stream1", "classes": [{"id": 0, "name": "a", "rgb": [0, 0, 0]},
                                                                  {"id": 2, "name": "b", "rgb": [0, 0, 0]}]})


def test_fused_extends_stream1():
    assert FUSED.names[: len(STREAM1)] == STREAM1.names
    assert FUSED.id_of("fat") == 7


def test_class_mask_examples():
    bg = make_label_map([[0, 0], [0, 0]], STREAM1)
    assert class_mask(bg, 0).all()
    assert not class_mask(bg, STREAM1.id_of("liver")).any()
    m = make_label_map([[4, 7, 4]])
    assert class_mask(m, 7).tolist() == [[False, True, False]]
    with pytest.raises(UnknownClassId):
        class_mask(bg, 7)


def test_label_map_is_read_only_and_indexed_xy():
    m = make_label_map([[0, 1, 2], [3, 4, 5]])
    assert m[2, 1] == 5
    assert (m.width, m.height) == (3, 2)
    with pytest.raises(ValueError):
        m.data[0, 0] = 1


@settings(max_examples=60, deadline=None)
@given(
    data=arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.integers(0, 7)),
)
def test_round_trip_identity(tmp_path_factory, data):
    p = tmp_path_factory.mktemp("rt") / "m.pgm"
    m = LabelMap(data, FUSED)
    save_label_map(m, p)
    back = load_label_map(p, expect=FUSED)
    assert back == m
    assert back.data.tobytes() == data.tobytes()
    assert encode_pgm(back.data) == p.read_bytes()
