"""Grayscale image container plus decode / resize / crop primitives.

Every vision stage works on 8-bit luminance grids. PGM-P5 is the bit-exact
interchange format (hand-rolled reader/writer); PNG is read through Pillow
and converted to luminance with fixed BT.601 weights so two decoders of the
same file always agree byte for byte.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


class ImagingError(Exception):
    pass


class MalformedInput(ImagingError):
    """Truncated or invalid image payload."""


class UnsupportedFormat(ImagingError):
    pass


class ZeroDimension(ImagingError):
    pass


class OutOfBounds(ImagingError):
    pass


# BT.601 luminance weights, applied with half-up rounding.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114


class GrayImage:
    """Immutable row-major grid of 8-bit luminance samples."""

    __slots__ = ("width", "height", "data")

    def __init__(self, width, height, data):
        if width < 1 or height < 1:
            raise ZeroDimension(f"image dimensions must be >= 1, got {width}x{height}")
        arr = np.asarray(data, dtype=np.uint8)
        if arr.size != width * height:
            raise MalformedInput(
                f"expected {width * height} samples for {width}x{height}, got {arr.size}"
            )
        arr = arr.reshape(height, width).copy()
        arr.setflags(write=False)
        self.width = int(width)
        self.height = int(height)
        self.data = arr

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise MalformedInput(f"expected a 2-D array, got ndim={arr.ndim}")
        return cls(arr.shape[1], arr.shape[0], arr.astype(np.uint8, copy=False))

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self):
        return hash((self.width, self.height, self.data.tobytes()))

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle, half-open: covers x..x+w-1, y..y+h-1."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ZeroDimension(f"rect sides must be positive, got {self.w}x{self.h}")

    def inside(self, img: GrayImage) -> bool:
        return (
            self.x >= 0
            and self.y >= 0
            and self.x + self.w <= img.width
            and self.y + self.h <= img.height
        )

    def translate(self, dx, dy) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def rgb_to_luma(rgb):
    """BT.601 luminance of an (h, w, 3) uint8 array, rounded half-up."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = _LUMA_R * rgb[..., 0] + _LUMA_G * rgb[..., 1] + _LUMA_B * rgb[..., 2]
    return np.clip(_round_half_up(y), 0, 255).astype(np.uint8)


def _pgm_tokens(data, count):
    """Yield `count` whitespace-separated header tokens, honoring # comments.

    Returns (tokens, offset_of_first_raster_byte).
    """
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
            i += 1
        if start == i:
            raise MalformedInput("truncated PGM header")
        tokens.append(data[start:i])
    if i >= n or not data[i : i + 1].isspace():
        raise MalformedInput("PGM header not terminated by whitespace")
    return tokens, i + 1


def decode_pgm(data: bytes) -> GrayImage:
    """Decode binary PGM (P5). Samples with maxval != 255 are rescaled by
    round(v * 255 / maxval)."""
    if not data.startswith(b"P5"):
        raise MalformedInput("not a P5 PGM stream")
    try:
        (magic, w_tok, h_tok, max_tok), offset = _pgm_tokens(data, 4)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except (ValueError, MalformedInput) as exc:
        raise MalformedInput(f"bad PGM header: {exc}") from None
    if width < 1 or height < 1:
        raise MalformedInput(f"bad PGM dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise MalformedInput(f"bad PGM maxval {maxval}")
    npix = width * height
    if maxval <= 255:
        raster = data[offset : offset + npix]
        if len(raster) < npix:
            raise MalformedInput("truncated PGM raster")
        samples = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        raster = data[offset : offset + 2 * npix]
        if len(raster) < 2 * npix:
            raise MalformedInput("truncated PGM raster")
        samples = np.frombuffer(raster, dtype=">u2").astype(np.float64)
    if maxval != 255:
        samples = _round_half_up(samples * 255.0 / maxval)
    return GrayImage(width, height, samples.astype(np.uint8))


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data.tobytes()


def decode_png(data: bytes) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        pil = Image.open(io.BytesIO(data))
        pil.load()
    except UnidentifiedImageError as exc:
        raise MalformedInput(f"invalid PNG: {exc}") from None
    except OSError as exc:
        raise MalformedInput(f"invalid PNG: {exc}") from None
    if pil.mode == "L":
        return GrayImage.from_array(np.asarray(pil))
    if pil.mode in ("P", "RGBA", "LA", "RGB", "I;16", "I"):
        rgb = np.asarray(pil.convert("RGB"))
        return GrayImage.from_array(rgb_to_luma(rgb))
    raise UnsupportedFormat(f"unsupported PNG mode {pil.mode}")


def decode_image(data: bytes, format: str | None = None) -> GrayImage:
    """Decode an encoded still. format is "pgm", "png", or None to sniff."""
    if format is None:
        if data.startswith(b"P5"):
            format = "pgm"
        elif data.startswith(b"\x89PNG"):
            format = "png"
        else:
            raise UnsupportedFormat("unrecognized image payload")
    fmt = format.lower()
    if fmt in ("pgm", "pgm-p5", "image/x-portable-graymap"):
        return decode_pgm(data)
    if fmt in ("png", "image/png"):
        if not data.startswith(b"\x89PNG"):
            raise MalformedInput("payload does not carry a PNG signature")
        return decode_png(data)
    raise UnsupportedFormat(f"unsupported format {format!r}")


def resize_nearest(img: GrayImage, new_w: int, new_h: int) -> GrayImage:
    """Nearest-neighbor resample. Source index = floor((i + 0.5) * src / dst)."""
    if new_w < 1 or new_h < 1:
        raise ZeroDimension(f"target dimensions must be >= 1, got {new_w}x{new_h}")
    if new_w == img.width and new_h == img.height:
        return img
    xs = np.minimum(
        np.floor((np.arange(new_w) + 0.5) * (img.width / new_w)).astype(np.intp),
        img.width - 1,
    )
    ys = np.minimum(
        np.floor((np.arange(new_h) + 0.5) * (img.height / new_h)).astype(np.intp),
        img.height - 1,
    )
    return GrayImage.from_array(img.data[np.ix_(ys, xs)])


def crop(img: GrayImage, r: Rect) -> GrayImage:
    if not r.inside(img):
        raise OutOfBounds(f"{r} outside {img.width}x{img.height}")
    return GrayImage.from_array(img.data[r.y : r.y + r.h, r.x : r.x + r.w])
