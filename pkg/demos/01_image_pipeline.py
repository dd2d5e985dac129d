"""Image basics: decode, grayscale, resize, crop.

Everything downstream (HOG, detection, identification) consumes the same
8-bit luminance grid shown here.
"""

import numpy as np

from mirrord import imaging
from mirrord.imaging import GrayImage, Rect

# A tiny PGM (the bit-exact interchange format) decoded by hand
pgm = b"P5\n4 2\n255\n" + bytes([0, 32, 64, 96, 128, 160, 192, 255])
img = imaging.decode_image(pgm)
print(f"decoded {img}: rows = {img.data.tolist()}")

# Round-trip is bit exact
again = imaging.decode_pgm(imaging.encode_pgm(img))
print("pgm round-trip identical:", img == again)

# Color content becomes BT.601 luminance; pure red lands on 76
red = imaging.rgb_to_luma(np.array([[[255, 0, 0]]], dtype=np.uint8))
print("luminance of pure red:", int(red[0, 0]))

# Frames are downscaled to the processing resolution with nearest-neighbor
camera = GrayImage.from_array(
    np.random.default_rng(0).integers(0, 256, (480, 640), dtype=np.uint8))
frame = imaging.resize_nearest(camera, 480, 360)
print(f"camera {camera} -> processing frame {frame}")

# Crops are plain sub-grids
face_box = Rect(100, 80, 64, 64)
crop = imaging.crop(frame, face_box)
print(f"crop at {face_box} -> {crop}")
