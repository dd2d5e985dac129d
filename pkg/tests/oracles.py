"""Independent brute-force oracles.

These deliberately avoid every vectorized code path in mirrord: plain
Python loops and math.* only, so agreement with the library is evidence,
not tautology.
"""

import math


def naive_hog(pixels, window_w, window_h, cell=8, block=2, stride=1, bins=9,
              signed=False, clip=0.2, eps=1e-6):
    """Per-pixel reference HOG. `pixels` is a list of rows of ints."""
    orient_range = 360.0 if signed else 180.0
    bin_width = orient_range / bins

    def at(x, y):
        x = min(max(x, 0), window_w - 1)
        y = min(max(y, 0), window_h - 1)
        return float(pixels[y][x])

    cells_x = window_w // cell
    cells_y = window_h // cell
    hist = [[[0.0] * bins for _ in range(cells_x)] for _ in range(cells_y)]
    for y in range(window_h):
        for x in range(window_w):
            gx = at(x + 1, y) - at(x - 1, y)
            gy = at(x, y + 1) - at(x, y - 1)
            mag = math.sqrt(gx * gx + gy * gy)
            theta = math.degrees(math.atan2(gy, gx)) % orient_range
            pos = theta / bin_width
            lo = math.floor(pos)
            frac = pos - lo
            lo_bin = int(lo) % bins
            hi_bin = (lo_bin + 1) % bins
            cy, cx = y // cell, x // cell
            hist[cy][cx][lo_bin] += mag * (1.0 - frac)
            hist[cy][cx][hi_bin] += mag * frac

    nbx = (cells_x - block) // stride + 1
    nby = (cells_y - block) // stride + 1
    descriptor = []
    for by in range(nby):
        for bx in range(nbx):
            v = []
            for cy in range(by * stride, by * stride + block):
                for cx in range(bx * stride, bx * stride + block):
                    v.extend(hist[cy][cx])
            norm = math.sqrt(sum(e * e for e in v) + eps * eps)
            v = [min(e / norm, clip) for e in v]
            norm = math.sqrt(sum(e * e for e in v) + eps * eps)
            descriptor.extend(e / norm for e in v)
    return descriptor


def best_linear_accuracy(points, labels, grid=21, span=3.0):
    """Best training accuracy any half-plane sign(w.x + b) can reach on the
    given 2-D points, by dense grid search over (w1, w2, b). Ties (score
    exactly 0) count as the negative class, matching the library rule."""
    best = 0.0
    steps = [span * (2.0 * i / (grid - 1) - 1.0) for i in range(grid)]
    for w1 in steps:
        for w2 in steps:
            for b in steps:
                correct = 0
                for (x1, x2), y in zip(points, labels):
                    score = w1 * x1 + w2 * x2 + b
                    pred = 1 if score > 0 else -1
                    if pred == y:
                        correct += 1
                best = max(best, correct / len(points))
    return best


def hinge_objective(weights, bias, lambda_, samples, labels):
    """Reference regularized hinge objective, plain loops."""
    total = 0.0
    for x, y in zip(samples, labels):
        score = sum(w * xi for w, xi in zip(weights, x)) + bias
        total += max(0.0, 1.0 - y * score)
    reg = 0.5 * lambda_ * (sum(w * w for w in weights) + bias * bias)
    return reg + total / len(samples)
