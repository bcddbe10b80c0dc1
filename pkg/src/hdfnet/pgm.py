"""Binary greyscale PGM (P5, maxval 255) reading and writing."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PgmParseError

_WHITESPACE = b" \t\n\r\v\f"


@dataclass
class GrayImage:
    width: int
    height: int
    pixels: bytes  # row-major, one byte per pixel

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(f"pixel payload has {len(self.pixels)} bytes, expected {self.width * self.height}")

    def to_array(self) -> np.ndarray:
        """(height, width) float64 in [0, 1]."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width) / 255.0

    @classmethod
    def from_array(cls, values: np.ndarray) -> "GrayImage":
        """Quantise a 2-D [0, 1] array (or pass through uint8)."""
        values = np.asarray(values)
        if values.dtype != np.uint8:
            values = np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
        h, w = values.shape
        return cls(w, h, values.tobytes())


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Skip whitespace and '#' comments, then read one token."""
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmParseError("unexpected end of header", start)
    return data[start:pos], pos


def _int_token(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, end = _next_token(data, pos)
    if not tok.isdigit():
        raise PgmParseError(f"expected {what}, found {tok[:16]!r}", end - len(tok))
    return int(tok), end


def read_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        raise PgmParseError(f"bad magic {data[:2]!r}, expected b'P5'", 0)
    pos = 2
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE + b"#":
        raise PgmParseError("missing whitespace after magic", pos)
    width, pos = _int_token(data, pos, "width")
    height, pos = _int_token(data, pos, "height")
    maxval_at = pos
    maxval, pos = _int_token(data, pos, "maxval")
    if width <= 0 or height <= 0:
        raise PgmParseError(f"non-positive dimensions {width}x{height}", maxval_at)
    if maxval != 255:
        raise PgmParseError(f"maxval {maxval} unsupported, only 255", maxval_at)
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PgmParseError("missing single whitespace before raster", pos)
    pos += 1
    need = width * height
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise PgmParseError(f"truncated raster: {len(payload)} of {need} bytes", pos + len(payload))
    return GrayImage(width, height, bytes(payload))


def write_pgm(img: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels


def load_pgm(path) -> GrayImage:
    return read_pgm(Path(path).read_bytes())


def save_pgm(path, img: GrayImage) -> None:
    Path(path).write_bytes(write_pgm(img))
