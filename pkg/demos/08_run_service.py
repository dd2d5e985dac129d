"""Spin up the full daemon and walk the mirror's day over plain HTTP.

Uses simulated connectivity and mock providers, so it runs anywhere. The
same flow drives the dashboard UI in production.
"""

import tempfile
import time
from pathlib import Path

import requests

from mirrord import classify, facegen, imaging
from mirrord.config import ServiceConfig
from mirrord.service import serve

workdir = Path(tempfile.mkdtemp(prefix="mirror-demo-"))
print("training the bundled detector (one-time, seeded)...")
classify.save_model(facegen.train_bundled_detector(64), workdir / "detector.svm")

cfg = ServiceConfig(
    listen="127.0.0.1:0",
    data_dir=str(workdir),
    model_path=str(workdir / "detector.svm"),
    database_path=str(workdir / "faces.json"),
    connectivity_mode="sim",
    detect_interval=0.0,
)
service = serve(cfg)
base = f"http://127.0.0.1:{service.port}"
print(f"mirrord up at {base}\n")

try:
    requests.post(f"{base}/api/sim/connectivity", json={"up": True})
    print("state:", requests.get(f"{base}/api/state").json()["session"]["state"])

    print("enrolling ada from three face crops...")
    files = [("images", (f"{v}.pgm",
                         imaging.encode_pgm(facegen.face_image(0, v, 64)),
                         "image/x-portable-graymap")) for v in range(3)]
    requests.post(f"{base}/api/users/ada/enroll", files=files,
                  data={"display_name": "Ada"})

    print("posting a frame with ada in it (full detection pass)...")
    frame = facegen.paste(facegen.background_image(1, 480, 360),
                          facegen.face_image(0, 4, 64), 168, 120)
    t0 = time.perf_counter()
    body = requests.post(f"{base}/api/frame", data=imaging.encode_pgm(frame),
                         headers={"Content-Type": "image/x-portable-graymap"}).json()
    print(f"  -> {body} in {time.perf_counter() - t0:.1f}s")

    doc = requests.get(f"{base}/api/state").json()
    print("session:", doc["session"]["state"], "as", doc["user_id"])
    print("allowed features:", len(doc["allowed_features"]))

    for text in ("add todo water the plants", "what is my daily schedule",
                 "show traffic"):
        body = requests.post(f"{base}/api/command", json={"text": text}).json()
        print(f"command {text!r} -> {body['outcome']}: "
              f"{body.get('speech_text', body.get('reason', ''))}")
finally:
    service.stop()
    print("\nservice stopped")
