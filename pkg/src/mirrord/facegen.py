"""Deterministic synthetic face corpus for training and fixtures.

There is no bundled photo dataset; instead faces are rendered from a small
parametric model (head ellipse, eyes, brows, nose, mouth) whose parameters
are fixed per identity, with mild per-variant jitter (shift, scale, noise,
brightness) so embeddings of one identity cluster while identities stay
apart. Negative windows are mined from procedural background textures.
Everything derives from seeds, so corpora are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import GrayImage


@dataclass(frozen=True)
class FaceParams:
    head_rx: float
    head_ry: float
    eye_y: float
    eye_dx: float
    eye_rx: float
    eye_ry: float
    brow_dy: float
    brow_w: float
    nose_w: float
    nose_len: float
    mouth_y: float
    mouth_rx: float
    mouth_ry: float
    hairline: float  # fraction of head height covered by hair from the top
    glasses: bool
    skin: float
    feature_shade: float
    background: float


def _rng(*seeds):
    return np.random.default_rng(np.random.SeedSequence(list(seeds)))


def identity_params(identity_id: int) -> FaceParams:
    r = _rng(0xFACE, identity_id)
    return FaceParams(
        head_rx=r.uniform(0.25, 0.40),
        head_ry=r.uniform(0.36, 0.48),
        eye_y=r.uniform(0.36, 0.48),
        eye_dx=r.uniform(0.09, 0.20),
        eye_rx=r.uniform(0.022, 0.060),
        eye_ry=r.uniform(0.016, 0.045),
        brow_dy=r.uniform(0.05, 0.11),
        brow_w=r.uniform(0.04, 0.11),
        nose_w=r.uniform(0.010, 0.034),
        nose_len=r.uniform(0.09, 0.22),
        mouth_y=r.uniform(0.63, 0.78),
        mouth_rx=r.uniform(0.06, 0.17),
        mouth_ry=r.uniform(0.014, 0.050),
        hairline=r.uniform(0.10, 0.34),
        glasses=bool(r.uniform() < 0.4),
        skin=r.uniform(150, 205),
        feature_shade=r.uniform(25, 70),
        background=r.uniform(35, 85),
    )


def _ellipse(X, Y, cx, cy, rx, ry):
    return ((X - cx) / rx) ** 2 + ((Y - cy) / ry) ** 2 <= 1.0


def face_image(identity_id: int, variant: int = 0, size: int = 64) -> GrayImage:
    """Render one face crop; (identity_id, variant, size) fixes every pixel."""
    p = identity_params(identity_id)
    r = _rng(0xFACE, identity_id, 0xB0B, variant)
    # jitter models residual detector-box misalignment: about a pixel of
    # shift and a few percent of scale at desk distance
    dx = r.uniform(-0.015, 0.015)
    dy = r.uniform(-0.015, 0.015)
    scale = r.uniform(0.97, 1.03)
    brightness = r.uniform(-18, 18)
    noise_sigma = r.uniform(0.5, 1.5)

    ax = np.linspace(0.0, 1.0, size, endpoint=False) + 0.5 / size
    X, Y = np.meshgrid(ax, ax)
    cx, cy = 0.5 + dx, 0.5 + dy

    canvas = np.full((size, size), p.background, dtype=np.float64)
    head = _ellipse(X, Y, cx, cy, p.head_rx * scale, p.head_ry * scale)
    # soft top-lit shading keeps the head gradient-rich under HOG
    canvas[head] = p.skin - 28.0 * (Y[head] - (cy - p.head_ry)) / (2 * p.head_ry)

    shade = p.feature_shade
    head_top = cy - p.head_ry * scale
    hair = head & (Y <= head_top + p.hairline * 2 * p.head_ry * scale)
    canvas[hair] = shade + 5.0

    eye_y = cy + (p.eye_y - 0.5) * scale
    for side in (-1.0, 1.0):
        ex = cx + side * p.eye_dx * scale
        canvas[_ellipse(X, Y, ex, eye_y, p.eye_rx * scale, p.eye_ry * scale)] = shade
        brow = (
            (np.abs(X - ex) <= p.brow_w * scale)
            & (np.abs(Y - (eye_y - p.brow_dy * scale)) <= 0.012)
        )
        canvas[brow & head] = shade + 35.0
        if p.glasses:
            rim_rx = (p.eye_rx + 0.035) * scale
            rim_ry = (p.eye_ry + 0.030) * scale
            rim = _ellipse(X, Y, ex, eye_y, rim_rx, rim_ry) & ~_ellipse(
                X, Y, ex, eye_y, rim_rx - 0.014, rim_ry - 0.014
            )
            canvas[rim] = shade - 10.0
    if p.glasses:
        bridge = (np.abs(Y - eye_y) <= 0.010) & (np.abs(X - cx) <= p.eye_dx * scale)
        canvas[bridge & head] = shade - 10.0

    nose = (
        (np.abs(X - cx) <= p.nose_w * scale)
        & (Y >= eye_y + 0.04)
        & (Y <= eye_y + 0.04 + p.nose_len * scale)
    )
    canvas[nose & head] = p.skin - 45.0

    mouth_y = cy + (p.mouth_y - 0.5) * scale
    canvas[_ellipse(X, Y, cx, mouth_y, p.mouth_rx * scale, p.mouth_ry * scale)] = shade + 15.0

    canvas += brightness
    canvas += r.normal(0.0, noise_sigma, canvas.shape)
    return GrayImage.from_array(np.clip(np.round(canvas), 0, 255).astype(np.uint8))


def background_image(index: int, width: int = 480, height: int = 360) -> GrayImage:
    """Procedural non-face texture: ramps, stripes, checkers, blobs, noise."""
    r = _rng(0xBA5E, index)
    ax = np.linspace(0.0, 1.0, width)
    ay = np.linspace(0.0, 1.0, height)
    X, Y = np.meshgrid(ax, ay)
    kind = index % 5
    if kind == 0:
        a, b = r.uniform(-120, 120, 2)
        canvas = 128.0 + a * (X - 0.5) + b * (Y - 0.5)
    elif kind == 1:
        fx, fy = r.uniform(1.0, 9.0, 2)
        canvas = 128.0 + r.uniform(30, 90) * np.sin(
            2 * np.pi * (fx * X + fy * Y) + r.uniform(0, 2 * np.pi)
        )
    elif kind == 2:
        tiles = r.integers(4, 12)
        canvas = 70.0 + 110.0 * (
            (np.floor(X * tiles) + np.floor(Y * tiles)) % 2
        )
    elif kind == 3:
        canvas = np.full((height, width), 110.0)
        for _ in range(int(r.integers(3, 7))):
            bx, by = r.uniform(0.1, 0.9, 2)
            s = r.uniform(0.02, 0.12)
            canvas += r.uniform(-90, 90) * np.exp(
                -(((X - bx) ** 2 + (Y - by) ** 2) / (2 * s * s))
            )
    else:
        canvas = r.uniform(30, 225, (height, width))
    return GrayImage.from_array(np.clip(np.round(canvas), 0, 255).astype(np.uint8))


def mine_negative_windows(n: int, window: int = 64, seed: int = 11):
    """Random window-sized crops from the procedural backgrounds.

    Crops are taken from several nearest-neighbor downscales of each
    texture (factors 1.2^k), matching the statistics a detection pyramid
    will actually slide over.
    """
    from .imaging import resize_nearest

    r = _rng(0x4E6, seed)
    crops = []
    idx = 0
    while len(crops) < n:
        bg = background_image(idx, 480, 360)
        for k in (0, 2, 4, 6):
            factor = 1.2 ** k
            level = resize_nearest(
                bg, max(window, int(round(480 / factor))), max(window, int(round(360 / factor)))
            )
            for _ in range(max(1, n // 48)):
                if len(crops) >= n:
                    break
                x = int(r.integers(0, level.width - window + 1))
                y = int(r.integers(0, level.height - window + 1))
                crops.append(
                    GrayImage.from_array(level.data[y : y + window, x : x + window])
                )
        idx += 1
    return crops


def training_corpus(n_pos: int = 72, n_neg: int = 240, window: int = 64,
                    n_identities: int = 12):
    """(positives, negatives) window-sized crops for detector training."""
    variants = -(-n_pos // n_identities)
    positives = [
        face_image(ident, var, window)
        for ident in range(n_identities)
        for var in range(variants)
    ][:n_pos]
    return positives, mine_negative_windows(n_neg, window)


# Frozen detector recipe: at these settings every bundled background slides
# clean (all window scores < 0) while planted faces, including identities
# outside the training set, score > 6 at the default 0.0 threshold.
DETECTOR_RECIPE = dict(n_pos=120, n_neg=400, n_identities=20,
                       lambda_=3e-5, epochs=80, seed=3)


def train_bundled_detector(window: int = 64):
    """Linear SVM over HOG descriptors of the bundled synthetic corpus."""
    from .classify import svm_train
    from .hog import HogConfig, hog_many

    cfg = HogConfig(window, window)
    r = DETECTOR_RECIPE
    pos, neg = training_corpus(r["n_pos"], r["n_neg"], window, r["n_identities"])
    X = np.vstack([
        hog_many(np.stack([p.data for p in pos]), cfg),
        hog_many(np.stack([n.data for n in neg]), cfg),
    ])
    y = np.array([1.0] * len(pos) + [-1.0] * len(neg))
    return svm_train(X, y, lambda_=r["lambda_"], epochs=r["epochs"], seed=r["seed"])


def paste(background: GrayImage, patch: GrayImage, x: int, y: int) -> GrayImage:
    """New image with `patch` written into `background` at (x, y)."""
    if x < 0 or y < 0 or x + patch.width > background.width or y + patch.height > background.height:
        raise ValueError("patch does not fit inside background")
    out = background.data.copy()
    out[y : y + patch.height, x : x + patch.width] = patch.data
    return GrayImage.from_array(out)
