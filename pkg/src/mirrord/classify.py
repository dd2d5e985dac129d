"""Linear SVM training/scoring and the multi-scale sliding-window detector.

Training is deterministic Pegasos-style subgradient descent on the
regularized hinge loss, step 1/(lambda * t), sample order reshuffled once
per epoch by a seeded generator. The bias lives as an augmented constant-1
feature and is regularized with the weights, so the stored model is just
(w, b) with b = last augmented weight.

The detector builds a nearest-neighbor image pyramid, scores the HOG
descriptor of every stride-aligned window, maps hits back to original
coordinates, and runs greedy non-maximum suppression on half-open pixel
rectangles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hog import HogConfig, descriptor_len, hog_many
from .imaging import GrayImage, Rect, resize_nearest


class ClassifyError(Exception):
    pass


class DimensionMismatch(ClassifyError):
    pass


class DegenerateInput(ClassifyError):
    """Training set lacks one of the two classes."""


class ModelDimensionMismatch(ClassifyError):
    pass


class WindowLargerThanImage(ClassifyError):
    pass


class MalformedModelFile(ClassifyError):
    pass


@dataclass(frozen=True)
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    lambda_: float
    epochs: int

    @property
    def dim(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class Detection:
    box: Rect
    score: float
    scale: float


def kernel_eval(x1, x2, kind: str = "linear") -> float:
    """K(x1, x2) for the supported kernel family (identity feature map)."""
    if kind != "linear":
        raise ValueError(f"unsupported kernel kind {kind!r}")
    a = np.asarray(x1, dtype=np.float64)
    b = np.asarray(x2, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dims differ: {a.shape} vs {b.shape}")
    return float(a @ b)


def svm_train(samples, labels, lambda_: float = 1e-4, epochs: int = 100,
              seed: int = 0) -> LinearSvmModel:
    """Minimize lambda/2 ||w||^2 + mean hinge loss by epoch-cyclic Pegasos.

    Identical (samples, labels, lambda_, epochs, seed) give a bit-identical
    model.
    """
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("samples must form an (n, d) matrix")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch("labels must match sample count")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1 or -1")
    if (y > 0).sum() == 0 or (y < 0).sum() == 0:
        raise DegenerateInput("need at least one sample of each class")
    if lambda_ <= 0:
        raise ValueError("lambda must be positive")

    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])  # bias as constant-1 feature
    w = np.zeros(d + 1)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lambda_ * t)
            margin = y[i] * (w @ Xa[i])
            w *= 1.0 - 1.0 / t  # (1 - eta * lambda)
            if margin < 1.0:
                w += (eta * y[i]) * Xa[i]
    return LinearSvmModel(weights=w[:d].copy(), bias=float(w[d]),
                          lambda_=float(lambda_), epochs=int(epochs))


def svm_score(model: LinearSvmModel, x) -> float:
    """Decision value w.x + b; the class is its sign, ties go negative."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DimensionMismatch(f"x has dim {x.shape}, model wants ({model.dim},)")
    return float(model.weights @ x + model.bias)


def hinge_objective(model: LinearSvmModel, samples, labels) -> float:
    """Regularized hinge objective at the model (bias counted in ||w||^2,
    matching how training regularizes it)."""
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    scores = X @ model.weights + model.bias
    hinge = np.maximum(0.0, 1.0 - y * scores).mean()
    sq = float(model.weights @ model.weights) + model.bias * model.bias
    return 0.5 * model.lambda_ * sq + float(hinge)


def save_model(model: LinearSvmModel, path):
    lines = [
        f"svmlinear v1 dim={model.dim} lambda={format(model.lambda_, '.17g')} "
        f"epochs={model.epochs}"
    ]
    lines.extend(format(float(v), ".17g") for v in model.weights)
    lines.append(format(model.bias, ".17g"))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> LinearSvmModel:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "svmlinear" or header[1] != "v1":
            raise MalformedModelFile(f"bad model header in {path}")
        fields = dict(part.split("=", 1) for part in header[2:])
        try:
            dim = int(fields["dim"])
            lambda_ = float(fields["lambda"])
            epochs = int(fields["epochs"])
        except (KeyError, ValueError) as exc:
            raise MalformedModelFile(f"bad model header fields: {exc}") from None
        values = [float(line) for line in fh if line.strip()]
    if len(values) != dim + 1:
        raise MalformedModelFile(
            f"expected {dim + 1} numbers, found {len(values)}"
        )
    return LinearSvmModel(weights=np.array(values[:dim]), bias=values[dim],
                          lambda_=lambda_, epochs=epochs)


def iou(a: Rect, b: Rect) -> float:
    """Intersection over union of half-open pixel rectangles."""
    ix = max(0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    if inter == 0:
        return 0.0
    return inter / float(a.w * a.h + b.w * b.h - inter)


def nms(detections, nms_iou: float):
    """Greedy suppression: keep best-first, drop overlaps above nms_iou.

    Ties in score break toward the smaller (y, x) top-left. Result stays
    sorted by score descending.
    """
    ordered = sorted(detections, key=lambda d: (-d.score, d.box.y, d.box.x))
    kept = []
    for det in ordered:
        if all(iou(det.box, k.box) <= nms_iou for k in kept):
            kept.append(det)
    return kept


def _pyramid(img: GrayImage, win_w, win_h, scale_step):
    """Yield (level_image, scale) until the window no longer fits."""
    scale = 1.0
    while True:
        w = max(1, int(round(img.width / scale)))
        h = max(1, int(round(img.height / scale)))
        if w < win_w or h < win_h:
            return
        yield resize_nearest(img, w, h), scale
        scale *= scale_step


def detect_faces(img: GrayImage, model: LinearSvmModel, cfg: HogConfig,
                 scale_step: float = 1.2, stride: int = 8,
                 threshold: float = 0.0, nms_iou: float = 0.3):
    """Multi-scale sliding-window detection, NMS-filtered, score-sorted."""
    if model.dim != descriptor_len(cfg):
        raise ModelDimensionMismatch(
            f"model dim {model.dim} != descriptor length {descriptor_len(cfg)}"
        )
    if img.width < cfg.window_w or img.height < cfg.window_h:
        raise WindowLargerThanImage(
            f"{cfg.window_w}x{cfg.window_h} window exceeds {img.width}x{img.height}"
        )
    if scale_step <= 1.0:
        raise ValueError("scale_step must exceed 1")
    if not 0.0 < nms_iou < 1.0:
        raise ValueError("nms_iou must lie in (0, 1)")

    win_w, win_h = cfg.window_w, cfg.window_h
    raw = []
    for level, _scale in _pyramid(img, win_w, win_h, scale_step):
        xs = np.arange(0, level.width - win_w + 1, stride)
        ys = np.arange(0, level.height - win_h + 1, stride)
        tiles = np.lib.stride_tricks.sliding_window_view(
            level.data, (win_h, win_w)
        )[::stride, ::stride]
        windows = tiles.reshape(-1, win_h, win_w)

        scores = np.empty(len(windows))
        chunk = 256  # bounds the float64 working set of the batch HOG
        for lo in range(0, len(windows), chunk):
            desc = hog_many(windows[lo : lo + chunk], cfg)
            scores[lo : lo + desc.shape[0]] = desc @ model.weights + model.bias

        fx = img.width / level.width
        fy = img.height / level.height
        hits = np.nonzero(scores > threshold)[0]
        for idx in hits:
            yi, xi = divmod(int(idx), len(xs))
            x0 = int(round(xs[xi] * fx))
            y0 = int(round(ys[yi] * fy))
            bw = min(int(round(win_w * fx)), img.width - x0)
            bh = min(int(round(win_h * fy)), img.height - y0)
            raw.append(Detection(box=Rect(x0, y0, bw, bh),
                                 score=float(scores[idx]), scale=fx))
    return nms(raw, nms_iou)
