import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdfnet.errors import PgmParseError
from hdfnet.pgm import GrayImage, load_pgm, read_pgm, save_pgm, write_pgm


def naive_header(data: bytes):
    """Second tokenizer: drop comments line by line, split on whitespace."""
    head = data[:data.index(b"255") + 3]
    tokens = re.sub(rb"#[^\r\n]*", b" ", head).split()
    return tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])


def test_two_by_two():
    data = b"P5 2 2 255\n" + bytes([0, 128, 255, 64])
    img = read_pgm(data)
    assert (img.width, img.height, img.pixels) == (2, 2, bytes([0, 128, 255, 64]))
    np.testing.assert_array_equal(img.to_array(), np.array([[0, 128], [255, 64]]) / 255.0)
    assert read_pgm(write_pgm(img)) == img


def test_maxval_65535_rejected():
    with pytest.raises(PgmParseError, match="maxval"):
        read_pgm(b"P5 2 2 65535\n" + bytes(8))


def test_bad_magic_offset():
    with pytest.raises(PgmParseError) as exc:
        read_pgm(b"P2 2 2 255\n" + bytes(4))
    assert exc.value.offset == 0 and "at byte 0" in str(exc.value)


def test_truncated_payload_offset():
    header = b"P5 3 2 255\n"
    with pytest.raises(PgmParseError, match="truncated") as exc:
        read_pgm(header + bytes(4))
    assert exc.value.offset == len(header) + 4


def test_garbage_dimension():
    with pytest.raises(PgmParseError, match="width"):
        read_pgm(b"P5 x 2 255\n" + bytes(4))


def test_empty_header():
    with pytest.raises(PgmParseError):
        read_pgm(b"P5 ")


@settings(max_examples=60, deadline=None)
@given(w=st.integers(1, 40), h=st.integers(1, 40),
       gaps=st.lists(st.sampled_from([b" ", b"\n", b"\n# note\n", b"\t", b" #x 1 2 3\n", b"\r\n"]),
                     min_size=3, max_size=3))
def test_comments_parse_like_naive_tokenizer(w, h, gaps):
    raster = bytes(range(256)) * (w * h // 256 + 1)
    data = b"P5" + gaps[0] + b"%d" % w + gaps[1] + b"%d" % h + gaps[2] + b"255\n" + raster[:w * h]
    img = read_pgm(data)
    assert naive_header(data) == (b"P5", img.width, img.height, 255)
    plain = read_pgm(b"P5 %d %d 255\n" % (w, h) + raster[:w * h])
    assert img == plain


@settings(max_examples=200, deadline=None)
@given(w=st.integers(1, 32), h=st.integers(1, 32), data=st.data())
def test_round_trip(w, h, data):
    pixels = data.draw(st.binary(min_size=w * h, max_size=w * h))
    img = GrayImage(w, h, pixels)
    first = read_pgm(write_pgm(img))
    assert first == img
    assert read_pgm(write_pgm(first)) == first


def test_array_quantisation():
    arr = np.array([[0.0, 0.5], [1.0, 0.2]])
    img = GrayImage.from_array(arr)
    assert img.pixels == bytes([0, 128, 255, 51])
    assert GrayImage.from_array(img.to_array()) == img


def test_file_helpers(tmp_path):
    img = GrayImage(3, 1, bytes([1, 2, 3]))
    save_pgm(tmp_path / "a.pgm", img)
    assert load_pgm(tmp_path / "a.pgm") == img


def test_payload_length_checked():
    with pytest.raises(ValueError):
        GrayImage(2, 2, bytes(3))
