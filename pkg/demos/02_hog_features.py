"""The HOG descriptor, stage by stage.

Centered-difference gradients, orientation histograms per 8x8 cell, and
L2-Hys block normalization. The classic 64x128 pedestrian geometry yields
exactly 3780 components; the 64x64 face geometry used for identification
yields 1764.
"""

import numpy as np

from mirrord import facegen, hog
from mirrord.hog import HogConfig
from mirrord.imaging import GrayImage

# Gradients on a hand-checkable image
img = GrayImage.from_array(np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]],
                                    dtype=np.uint8))
field = hog.gradients(img)
print("center pixel: gx =", field.gx[1, 1], " gy =", field.gy[1, 1],
      " magnitude =", round(field.mag[1, 1], 4),
      " direction =", round(field.theta[1, 1], 2), "deg")

# Descriptor geometry
for cfg in (HogConfig(64, 128), HogConfig(64, 64)):
    print(f"window {cfg.window_w}x{cfg.window_h}: "
          f"{cfg.nblocks_x}x{cfg.nblocks_y} blocks x "
          f"{cfg.block ** 2 * cfg.bins} values = {hog.descriptor_len(cfg)}")

# A real descriptor of a synthetic face crop
face = facegen.face_image(identity_id=0, variant=0, size=64)
vec = hog.hog_descriptor(face, HogConfig(64, 64))
print(f"face descriptor: {vec.shape[0]} components, "
      f"range [{vec.min():.3f}, {vec.max():.3f}]")

# Brightness shifts cancel in the [-1, 0, 1] template
brighter = GrayImage.from_array(np.clip(face.data.astype(int) + 25, 0, 255)
                                .astype(np.uint8))
same = np.array_equal(vec, hog.hog_descriptor(brighter, HogConfig(64, 64)))
print("descriptor invariant to +25 brightness:", same)
