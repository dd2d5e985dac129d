"""Enrollment database and k-nearest-neighbor identification.

A face "embedding" is the L2-normalized HOG descriptor of the face crop
resized to the database's fixed geometry. Identification takes the k
nearest stored embeddings by Euclidean distance (ties broken by earlier
enrollment time, then user id); a user wins only with a strict majority
(> k/2 of the requested k) whose mean distance stays under the acceptance
threshold, otherwise the caller gets Unknown and the mirror stays in the
general tier.

The database file is JSON with floats written at 17 significant digits and
is replaced atomically (temp file + rename), so a power cut mid-save can
never leave a half-written store.
"""

from __future__ import annotations

import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .classify import LinearSvmModel, detect_faces
from .hog import HogConfig, descriptor_len, hog_descriptor
from .imaging import GrayImage, Rect, crop, resize_nearest

SCHEMA_VERSION = 1

DEFAULT_K = 3
DEFAULT_ACCEPT_DIST = 0.6


class IdentityError(Exception):
    pass


class DegenerateCrop(IdentityError):
    """Constant crop: the HOG descriptor is all zero, no usable embedding."""


class TooFewSamples(IdentityError):
    pass


class DimensionMismatch(IdentityError):
    pass


class GeometryMismatch(IdentityError):
    pass


class MalformedDatabase(IdentityError):
    pass


class DuplicateDisplayNameWarning(UserWarning):
    """Another user already carries this display name (non-fatal)."""


@dataclass
class IdentityRecord:
    user_id: str
    display_name: str
    embeddings: list  # of 1-D float64 arrays, unit norm
    enrolled_at: list  # iso-8601 strings, one per embedding


@dataclass
class FaceDatabase:
    face_geometry: HogConfig
    records: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    path: str | None = None  # when set, enroll() persists here atomically

    def record_for(self, user_id):
        for rec in self.records:
            if rec.user_id == user_id:
                return rec
        return None

    def embedding_count(self):
        return sum(len(r.embeddings) for r in self.records)


@dataclass(frozen=True)
class MatchResult:
    outcome: str  # "identified" | "unknown"
    user_id: str | None
    votes: dict
    mean_distance: float | None

    @property
    def identified(self):
        return self.outcome == "identified"


def embed_face(img: GrayImage, box: Rect, geometry: HogConfig) -> np.ndarray:
    """Crop, resize to the geometry window, HOG, L2-normalize."""
    face = resize_nearest(crop(img, box), geometry.window_w, geometry.window_h)
    desc = hog_descriptor(face, geometry)
    norm = float(np.linalg.norm(desc))
    if norm == 0.0:
        raise DegenerateCrop("constant crop produced an all-zero descriptor")
    return desc / norm


def _now_iso():
    return datetime.now(timezone.utc).isoformat()


def enroll(db: FaceDatabase, user_id: str, display_name: str, images,
           timestamps=None) -> FaceDatabase:
    """Add embeddings for `images` (list of (GrayImage, Rect)); needs >= 3.

    Returns the updated database (same object) and persists it atomically
    when the database carries a path.
    """
    if len(images) < 3:
        raise TooFewSamples(f"enrollment needs >= 3 images, got {len(images)}")
    embeddings = [embed_face(img, box, db.face_geometry) for img, box in images]
    if timestamps is None:
        timestamps = [_now_iso()] * len(embeddings)
    if len(timestamps) != len(embeddings):
        raise ValueError("one timestamp per image required")

    rec = db.record_for(user_id)
    if rec is None:
        taken = {r.display_name for r in db.records}
        if display_name in taken:
            warnings.warn(f"display name {display_name!r} is already in use",
                          DuplicateDisplayNameWarning, stacklevel=2)
        rec = IdentityRecord(user_id=user_id, display_name=display_name,
                             embeddings=[], enrolled_at=[])
        db.records.append(rec)
    else:
        expect = len(rec.embeddings[0]) if rec.embeddings else None
        if expect is not None and expect != descriptor_len(db.face_geometry):
            raise GeometryMismatch(
                f"record {user_id} holds dim-{expect} embeddings, "
                f"geometry wants {descriptor_len(db.face_geometry)}"
            )
    rec.embeddings.extend(embeddings)
    rec.enrolled_at.extend(timestamps)
    if db.path:
        save_database(db, db.path)
    return db


def add_embeddings(db: FaceDatabase, user_id: str, display_name: str,
                   embeddings, timestamps) -> FaceDatabase:
    """Low-level enroll for pre-computed embeddings (used by tooling)."""
    rec = db.record_for(user_id)
    if rec is None:
        rec = IdentityRecord(user_id=user_id, display_name=display_name,
                             embeddings=[], enrolled_at=[])
        db.records.append(rec)
    rec.embeddings.extend(np.asarray(e, dtype=np.float64) for e in embeddings)
    rec.enrolled_at.extend(timestamps)
    if db.path:
        save_database(db, db.path)
    return db


def identify(db: FaceDatabase, query, k: int = DEFAULT_K,
             accept_dist: float = DEFAULT_ACCEPT_DIST) -> MatchResult:
    """Vote among the k nearest enrolled embeddings.

    Identified requires a strict majority (> k/2 of the requested k) and
    the winner's mean voting distance <= accept_dist. An empty database is
    simply Unknown.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    want_dim = descriptor_len(db.face_geometry)
    if query.shape != (want_dim,):
        raise DimensionMismatch(f"query dim {query.shape} != geometry dim {want_dim}")

    rows = []
    for rec in db.records:
        for emb, ts in zip(rec.embeddings, rec.enrolled_at):
            dist = float(np.linalg.norm(emb - query))
            rows.append((dist, ts, rec.user_id))
    if not rows:
        return MatchResult("unknown", None, {}, None)

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    neighbors = rows[:k]
    votes = {}
    for dist, _ts, uid in neighbors:
        votes[uid] = votes.get(uid, 0) + 1
    winner, count = max(votes.items(), key=lambda kv: kv[1])
    if count <= k / 2:
        return MatchResult("unknown", None, votes, None)
    mean_dist = float(np.mean([d for d, _t, u in neighbors if u == winner]))
    if mean_dist > accept_dist:
        return MatchResult("unknown", None, votes, mean_dist)
    return MatchResult("identified", winner, votes, mean_dist)


@dataclass(frozen=True)
class Recognition:
    """Outcome of running detection + identification over one frame."""

    kind: str  # "no_face" | "unknown" | "identified"
    user_id: str | None = None
    box: Rect | None = None
    score: float | None = None
    faces_found: int = 0


def recognize_frame(img: GrayImage, model: LinearSvmModel, det_cfg: HogConfig,
                    db: FaceDatabase, k: int = DEFAULT_K,
                    accept_dist: float = DEFAULT_ACCEPT_DIST,
                    scale_step: float = 1.2, stride: int = 8,
                    threshold: float = 0.0, nms_iou: float = 0.3) -> Recognition:
    """Detect faces, then identify the highest-scoring one."""
    detections = detect_faces(img, model, det_cfg, scale_step=scale_step,
                              stride=stride, threshold=threshold, nms_iou=nms_iou)
    if not detections:
        return Recognition(kind="no_face")
    best = detections[0]
    query = embed_face(img, best.box, db.face_geometry)
    match = identify(db, query, k=k, accept_dist=accept_dist)
    if match.identified:
        return Recognition(kind="identified", user_id=match.user_id,
                           box=best.box, score=best.score,
                           faces_found=len(detections))
    return Recognition(kind="unknown", box=best.box, score=best.score,
                       faces_found=len(detections))


# --- persistence ------------------------------------------------------------

def _emit_json(obj, out):
    """json.dump with floats at 17 significant digits."""
    if isinstance(obj, dict):
        out.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit_json(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, val in enumerate(obj):
            if i:
                out.append(",")
            _emit_json(val, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format(float(obj), ".17g"))
    elif obj is None:
        out.append("null")
    else:
        out.append(json.dumps(obj))


def dumps_database(db: FaceDatabase) -> str:
    g = db.face_geometry
    doc = {
        "schema_version": db.schema_version,
        "face_geometry": {
            "window_w": g.window_w, "window_h": g.window_h, "cell": g.cell,
            "block": g.block, "block_stride": g.block_stride, "bins": g.bins,
            "signed": g.signed, "clip": g.clip, "eps": g.eps,
        },
        "records": [
            {
                "user_id": r.user_id,
                "display_name": r.display_name,
                "embeddings": [list(map(float, e)) for e in r.embeddings],
                "enrolled_at": list(r.enrolled_at),
            }
            for r in db.records
        ],
    }
    out = []
    _emit_json(doc, out)
    return "".join(out)


def loads_database(text: str, path=None) -> FaceDatabase:
    try:
        doc = json.loads(text)
        geometry = HogConfig(**doc["face_geometry"])
        records = [
            IdentityRecord(
                user_id=r["user_id"],
                display_name=r["display_name"],
                embeddings=[np.asarray(e, dtype=np.float64) for e in r["embeddings"]],
                enrolled_at=list(r["enrolled_at"]),
            )
            for r in doc["records"]
        ]
        ids = [r.user_id for r in records]
        if len(ids) != len(set(ids)):
            raise MalformedDatabase("duplicate user_id in database file")
        return FaceDatabase(face_geometry=geometry, records=records,
                            schema_version=int(doc["schema_version"]), path=path)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise MalformedDatabase(f"cannot parse face database: {exc}") from None


def save_database(db: FaceDatabase, path):
    """Atomic write: temp file in the target directory, fsync, rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".facedb-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps_database(db))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_database(path) -> FaceDatabase:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_database(fh.read(), path=os.fspath(path))


def new_database(geometry: HogConfig, path=None) -> FaceDatabase:
    return FaceDatabase(face_geometry=geometry, records=[], path=path)
