"""mirrord: smart-mirror backend.

HOG + linear-SVM face detection and identification, a two-tier session
state machine with role-gated features, text-command dispatch, pluggable
information providers, an HTTP/SSE service, and a success-rate evaluation
kit.
"""

__version__ = "0.1.0"
