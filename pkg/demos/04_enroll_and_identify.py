"""Enrollment and k-nearest-neighbor identification.

Embeddings are unit-norm HOG descriptors of face crops. Identification
votes among the k nearest enrolled embeddings; a strict majority under the
acceptance distance names the user, anything else stays Unknown and the
mirror remains in the general tier.
"""

import numpy as np

from mirrord import facegen, identity
from mirrord.hog import HogConfig
from mirrord.imaging import Rect

geometry = HogConfig(64, 64)
db = identity.new_database(geometry)
FULL = Rect(0, 0, 64, 64)

for ident, name in enumerate(["ada", "grace", "edsger"]):
    images = [(facegen.face_image(ident, v, 64), FULL) for v in range(3)]
    identity.enroll(db, name, name.title(), images)
print(f"enrolled {len(db.records)} users, {db.embedding_count()} embeddings")

# A held-out photo of an enrolled user
query = identity.embed_face(facegen.face_image(1, 5, 64), FULL, geometry)
match = identity.identify(db, query, k=3, accept_dist=0.6)
print(f"held-out photo of grace -> {match.outcome} "
      f"user={match.user_id} votes={match.votes} "
      f"mean_distance={match.mean_distance:.3f}")

# A stranger: majority may exist, but distance rejects it
stranger = identity.embed_face(facegen.face_image(16, 0, 64), FULL, geometry)
match = identity.identify(db, stranger, k=3, accept_dist=0.6)
print(f"stranger -> {match.outcome} (votes {match.votes})")

# Persistence is atomic JSON with 17-significant-digit floats
identity.save_database(db, "/tmp/mirror-faces.json")
back = identity.load_database("/tmp/mirror-faces.json")
drift = max(float(np.max(np.abs(a - b)))
            for r0, r1 in zip(db.records, back.records)
            for a, b in zip(r0.embeddings, r1.embeddings))
print(f"database round-trip drift: {drift:.1e}")
