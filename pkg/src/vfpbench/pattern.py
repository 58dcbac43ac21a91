"""Deterministic test-pattern frames and their serializations.

The simulated board has no analog front end, so captured video is
synthesized: standard 100% colour bars plus a grey overlay band that
advances 4 rows per frame, which makes "moving images" checkable from
any two consecutive frames. Everything here is a pure function of its
arguments, so grabs and stream parts are bit-exact reproducible.

Frames serialize to binary PPM (P6) for grabs and to uncompressed
24-bit BMP for anything a browser has to render.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

DEFAULT_WIDTH = 720
DEFAULT_HEIGHT = 576
DEFAULT_FPS = 10.0

# 100% colour bars, left to right (Vid0 order; Vid1 reverses it).
COLOR_BARS = (
    (255, 255, 255),  # white
    (255, 255, 0),    # yellow
    (0, 255, 255),    # cyan
    (0, 255, 0),      # green
    (255, 0, 255),    # magenta
    (255, 0, 0),      # red
    (0, 0, 255),      # blue
    (0, 0, 0),        # black
)

OVERLAY_GREY = (128, 128, 128)
OVERLAY_ROWS = 8   # band thickness in rows
OVERLAY_STEP = 4   # rows the band moves per frame

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


class VideoInput(Enum):
    """The two capture inputs on the board front end."""

    VID0 = "vid0"
    VID1 = "vid1"


@dataclass(frozen=True, eq=False)
class Frame:
    """One captured frame: pixel data plus the counter that produced it."""

    width: int
    height: int
    counter: int
    source: VideoInput
    pixels: np.ndarray  # (height, width, 3) uint8, row-major top-down RGB


def pixel_at(x: int, y: int, counter: int, source: VideoInput,
             width: int, height: int) -> tuple[int, int, int]:
    """Closed-form pattern colour at one coordinate.

    Bar index is floor(x * 8 / width); Vid1 uses the reversed bar order.
    The overlay band covers rows [(4 * counter) mod height, +8) and wins
    over the bar colour.
    """
    if not (0 <= x < width and 0 <= y < height):
        raise ValueError(f"coordinate ({x}, {y}) outside {width}x{height}")
    offset = (OVERLAY_STEP * counter) % height
    if (y - offset) % height < OVERLAY_ROWS:
        return OVERLAY_GREY
    bars = COLOR_BARS if source is VideoInput.VID0 else COLOR_BARS[::-1]
    return bars[(x * 8) // width]


def render_frame(width: int, height: int, source: VideoInput, counter: int) -> Frame:
    """Render a full frame; vectorized equivalent of pixel_at per coordinate."""
    if width <= 0 or height <= 0:
        raise ValueError(f"bad frame geometry {width}x{height}")
    bars = np.asarray(COLOR_BARS, dtype=np.uint8)
    if source is VideoInput.VID1:
        bars = bars[::-1]
    bar_index = (np.arange(width, dtype=np.int64) * 8) // width
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = bars[bar_index]
    offset = (OVERLAY_STEP * counter) % height
    overlay = (np.arange(height, dtype=np.int64) - offset) % height < OVERLAY_ROWS
    pixels[overlay] = OVERLAY_GREY
    return Frame(width, height, counter, source, pixels)


def encode_ppm(frame: Frame) -> bytes:
    """Binary PPM (P6), top-down row-major RGB."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def encode_bmp(frame: Frame) -> bytes:
    """Uncompressed 24-bit BMP: bottom-up rows, BGR, rows padded to 4 bytes."""
    w, h = frame.width, frame.height
    row_size = (w * 3 + 3) & ~3
    rows = np.zeros((h, row_size), dtype=np.uint8)
    rows[:, : w * 3] = frame.pixels[::-1, :, ::-1].reshape(h, w * 3)
    data = rows.tobytes()
    file_header = struct.pack("<2sIHHI", b"BM", 54 + len(data), 0, 0, 54)
    info_header = struct.pack("<IiiHHIIiiII", 40, w, h, 1, 24, 0, len(data), 0, 0, 0, 0)
    return file_header + info_header + data


def decode_bmp(data: bytes) -> Frame:
    """Read back an encode_bmp image.

    Only the fixed layout produced by encode_bmp is supported (24 bpp,
    uncompressed, bottom-up). Counter and source are not stored in the
    file, so the returned frame carries counter 0 / Vid0.
    """
    if len(data) < 54 or data[:2] != b"BM":
        raise ValueError("not a BMP image")
    offset = struct.unpack_from("<I", data, 10)[0]
    header_size, w, h, planes, bpp, compression = struct.unpack_from("<IiiHHI", data, 14)
    if bpp != 24 or compression != 0 or h <= 0:
        raise ValueError(f"unsupported BMP variant (bpp={bpp}, compression={compression})")
    row_size = (w * 3 + 3) & ~3
    if len(data) < offset + row_size * h:
        raise ValueError("truncated BMP payload")
    rows = np.frombuffer(data, dtype=np.uint8, count=row_size * h, offset=offset)
    rows = rows.reshape(h, row_size)[:, : w * 3].reshape(h, w, 3)
    pixels = rows[::-1, :, ::-1].copy()
    return Frame(w, h, 0, VideoInput.VID0, pixels)


def fnv1a_64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = FNV64_OFFSET_BASIS
    prime = FNV64_PRIME
    for b in data:
        h = ((h ^ b) * prime) & 0xFFFFFFFFFFFFFFFF
    return h


def frame_digest(frame: Frame) -> int:
    """64-bit distinctness check for frames: FNV-1a over the PPM bytes."""
    return fnv1a_64(encode_ppm(frame))
