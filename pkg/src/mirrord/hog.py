"""Histogram-of-oriented-gradients descriptors.

Gradients use the centered [-1, 0, 1] template with replicate padding,
magnitude sqrt(gx^2 + gy^2), and orientation from the two-argument
arctangent folded to [0, 180) in the default unsigned mode (0 where the
gradient vanishes). Each pixel votes its magnitude into the two orientation
bins bracketing its angle, weighted linearly by distance to the bin centers
at i * (range / bins), wrapping across the range boundary. Blocks of cells
are L2-Hys normalized (L2 with eps, clip, re-L2) and concatenated row-major.

Everything is float64 so an independent per-pixel oracle can be matched to
1e-6 per component. The batch entry point computes descriptors for many
equally sized windows at once; the sliding-window detector depends on it
staying numerically identical to the single-window path (it is the same
code).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import GrayImage


class DimensionMismatch(Exception):
    pass


@dataclass(frozen=True)
class HogConfig:
    """Descriptor geometry: window in pixels, cell in pixels, block and
    stride in cells."""

    window_w: int = 64
    window_h: int = 128
    cell: int = 8
    block: int = 2
    block_stride: int = 1
    bins: int = 9
    signed: bool = False
    clip: float = 0.2
    eps: float = 1e-6

    def __post_init__(self):
        if self.window_w % self.cell or self.window_h % self.cell:
            raise ValueError(
                f"window {self.window_w}x{self.window_h} not divisible by cell {self.cell}"
            )
        if self.block < 1 or self.block_stride < 1:
            raise ValueError("block and block_stride must be >= 1")
        if self.block > min(self.cells_x, self.cells_y):
            raise ValueError("block exceeds cells per window")
        if self.bins < 2:
            raise ValueError("need at least 2 orientation bins")
        if not 0.0 < self.clip <= 1.0:
            raise ValueError("clip must lie in (0, 1]")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")

    @property
    def cells_x(self):
        return self.window_w // self.cell

    @property
    def cells_y(self):
        return self.window_h // self.cell

    @property
    def nblocks_x(self):
        return (self.cells_x - self.block) // self.block_stride + 1

    @property
    def nblocks_y(self):
        return (self.cells_y - self.block) // self.block_stride + 1

    @property
    def orientation_range(self):
        return 360.0 if self.signed else 180.0


def descriptor_len(cfg: HogConfig) -> int:
    return cfg.nblocks_x * cfg.nblocks_y * cfg.block * cfg.block * cfg.bins


@dataclass(frozen=True)
class GradientField:
    """Per-pixel gradient planes sharing the source image shape."""

    gx: np.ndarray
    gy: np.ndarray
    mag: np.ndarray
    theta: np.ndarray


def _gradient_planes(imgs, signed=False):
    """gx, gy, mag, theta for a (..., h, w) float64 stack, replicate borders."""
    h, w = imgs.shape[-2], imgs.shape[-1]
    xp = np.minimum(np.arange(w) + 1, w - 1)
    xm = np.maximum(np.arange(w) - 1, 0)
    yp = np.minimum(np.arange(h) + 1, h - 1)
    ym = np.maximum(np.arange(h) - 1, 0)
    gx = imgs[..., :, xp] - imgs[..., :, xm]
    gy = imgs[..., yp, :] - imgs[..., ym, :]
    mag = np.hypot(gx, gy)
    theta = np.degrees(np.arctan2(gy, gx)) % (360.0 if signed else 180.0)
    return gx, gy, mag, theta


def gradients(img: GrayImage, signed: bool = False) -> GradientField:
    """Centered-difference gradients of one image."""
    planes = img.data.astype(np.float64)
    gx, gy, mag, theta = _gradient_planes(planes, signed)
    return GradientField(gx=gx, gy=gy, mag=mag, theta=theta)


def _vote_histograms(mag, theta, cfg):
    """Accumulate per-cell orientation histograms for (n, h, w) planes.

    Returns (n, cells_y, cells_x, bins). Each pixel's magnitude is split
    between the two bins whose centers bracket theta.
    """
    n, h, w = mag.shape
    ncy, ncx, bins = h // cfg.cell, w // cfg.cell, cfg.bins
    bin_width = cfg.orientation_range / bins

    pos = theta / bin_width
    lo = np.floor(pos)
    frac = pos - lo
    lo_bin = lo.astype(np.intp) % bins
    hi_bin = (lo_bin + 1) % bins

    cell_row = np.arange(h) // cfg.cell
    cell_col = np.arange(w) // cfg.cell
    cell_idx = cell_row[:, None] * ncx + cell_col[None, :]  # (h, w)
    base = (np.arange(n)[:, None, None] * (ncy * ncx) + cell_idx) * bins

    weights = np.concatenate(
        [(mag * (1.0 - frac)).ravel(), (mag * frac).ravel()]
    )
    slots = np.concatenate([(base + lo_bin).ravel(), (base + hi_bin).ravel()])
    hist = np.bincount(slots, weights=weights, minlength=n * ncy * ncx * bins)
    return hist.reshape(n, ncy, ncx, bins)


def cell_histograms(field: GradientField, cfg: HogConfig) -> np.ndarray:
    """(cells_y, cells_x, bins) histogram grid for one window-sized field."""
    h, w = field.mag.shape
    if (w, h) != (cfg.window_w, cfg.window_h):
        raise DimensionMismatch(
            f"field is {w}x{h}, config window is {cfg.window_w}x{cfg.window_h}"
        )
    return _vote_histograms(field.mag[None], field.theta[None], cfg)[0]


def _normalize_blocks(hist, cfg):
    """L2-Hys over every block of an (n, cells_y, cells_x, bins) grid;
    returns flat (n, descriptor_len) row-major block order."""
    n = hist.shape[0]
    b, s, bins = cfg.block, cfg.block_stride, cfg.bins
    nby, nbx = cfg.nblocks_y, cfg.nblocks_x
    block_len = b * b * bins

    view = np.lib.stride_tricks.sliding_window_view(hist, (b, b), axis=(1, 2))
    view = view[:, ::s, ::s]  # (n, nby, nbx, bins, b, b)
    blocks = np.ascontiguousarray(np.moveaxis(view, 3, 5))  # (n, nby, nbx, b, b, bins)
    blocks = blocks.reshape(n, nby, nbx, block_len)

    eps2 = cfg.eps * cfg.eps
    norm = np.sqrt(np.sum(blocks * blocks, axis=-1, keepdims=True) + eps2)
    blocks = blocks / norm
    np.minimum(blocks, cfg.clip, out=blocks)
    norm = np.sqrt(np.sum(blocks * blocks, axis=-1, keepdims=True) + eps2)
    blocks = blocks / norm
    return blocks.reshape(n, nby * nbx * block_len)


def hog_many(windows: np.ndarray, cfg: HogConfig) -> np.ndarray:
    """Descriptors for an (n, window_h, window_w) uint8/float stack."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise DimensionMismatch(f"expected (n, h, w) stack, got ndim={windows.ndim}")
    n, h, w = windows.shape
    if (w, h) != (cfg.window_w, cfg.window_h):
        raise DimensionMismatch(
            f"windows are {w}x{h}, config window is {cfg.window_w}x{cfg.window_h}"
        )
    if n == 0:
        return np.zeros((0, descriptor_len(cfg)))
    _, _, mag, theta = _gradient_planes(windows, cfg.signed)
    hist = _vote_histograms(mag, theta, cfg)
    return _normalize_blocks(hist, cfg)


def hog_descriptor(window: GrayImage, cfg: HogConfig) -> np.ndarray:
    """Flattened HOG descriptor of one window, length descriptor_len(cfg)."""
    if (window.width, window.height) != (cfg.window_w, cfg.window_h):
        raise DimensionMismatch(
            f"window is {window.width}x{window.height}, "
            f"config wants {cfg.window_w}x{cfg.window_h}"
        )
    return hog_many(window.data[None], cfg)[0]


def write_descriptor_text(vec, fileobj):
    """One decimal per line, 9 significant digits (oracle interchange)."""
    for v in np.asarray(vec, dtype=np.float64):
        fileobj.write(format(float(v), ".9g") + "\n")


def read_descriptor_text(fileobj) -> np.ndarray:
    return np.array([float(line) for line in fileobj if line.strip()], dtype=np.float64)
