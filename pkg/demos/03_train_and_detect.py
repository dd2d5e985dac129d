"""Train the face/background classifier and run the sliding-window detector.

The corpus is procedural: parametric synthetic faces as positives,
window-sized crops of procedural textures as negatives. Training is
seeded Pegasos subgradient descent, so the model reproduces bit for bit.
"""

import time

import numpy as np

from mirrord import classify, facegen, hog
from mirrord.hog import HogConfig

cfg = HogConfig(64, 64)

print("building the bundled corpus and training (seeded, deterministic)...")
t0 = time.perf_counter()
model = facegen.train_bundled_detector(64)
print(f"  trained in {time.perf_counter() - t0:.1f}s, "
      f"{model.dim} weights, bias {model.bias:.3f}")

# Sanity: training margins
pos, neg = facegen.training_corpus(**{
    k: v for k, v in facegen.DETECTOR_RECIPE.items()
    if k in ("n_pos", "n_neg", "n_identities")})
X = np.vstack([hog.hog_many(np.stack([p.data for p in pos]), cfg),
               hog.hog_many(np.stack([n.data for n in neg]), cfg)])
y = np.array([1.0] * len(pos) + [-1.0] * len(neg))
scores = X @ model.weights + model.bias
print(f"  training accuracy {((scores > 0) == (y > 0)).mean():.1%}, "
      f"positive margin >= {scores[y > 0].min():.2f}, "
      f"negative margin <= {scores[y < 0].max():.2f}")

# Plant a face on a background and find it
frame = facegen.paste(facegen.background_image(3, 480, 360),
                      facegen.face_image(2, 1, 64), 160, 120)
t0 = time.perf_counter()
detections = classify.detect_faces(frame, model, cfg)
print(f"detection over the 480x360 frame took {time.perf_counter() - t0:.1f}s")
for d in detections:
    print(f"  box ({d.box.x},{d.box.y}) {d.box.w}x{d.box.h} "
          f"score {d.score:.2f} scale {d.scale:.2f}")

# The model file format is line-oriented text
classify.save_model(model, "/tmp/mirror-detector.svm")
with open("/tmp/mirror-detector.svm") as fh:
    print("model file header:", fh.readline().strip())
