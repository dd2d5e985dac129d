"""Operator command line: `mirrord` (the daemon) and `mirrorctl` (tooling).

Exit codes: 0 success, 1 operational error, 2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import classify, evalkit, identity, imaging
from .config import ConfigInvalid, emit_config, load_config
from .hog import HogConfig, hog_many
from .providers import ProviderConfig


def _fail(message):
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load_config(path):
    if not os.path.exists(path):
        raise ConfigInvalid([f"config file {path} not found"])
    return load_config(path)


def main_mirrord(argv=None):
    parser = argparse.ArgumentParser(prog="mirrord",
                                     description="smart-mirror backend daemon")
    sub = parser.add_subparsers(dest="command", required=True)
    serve_p = sub.add_parser("serve", help="run the mirror service")
    serve_p.add_argument("--config", required=True)
    serve_p.add_argument("--mock-providers", action="store_true",
                         help="force every provider into mock mode")
    serve_p.add_argument("--offline-sim", action="store_true",
                         help="simulate connectivity instead of probing")
    print_p = sub.add_parser("print-config", help="emit the effective configuration")
    print_p.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config)
    except ConfigInvalid as exc:
        for problem in exc.problems:
            print(f"config: {problem}", file=sys.stderr)
        return 1

    if args.command == "print-config":
        sys.stdout.write(emit_config(cfg))
        return 0

    if args.mock_providers:
        for pid in list(cfg.provider_settings):
            cfg.provider_settings[pid] = ProviderConfig()
    if args.offline_sim:
        cfg.connectivity_mode = "sim"

    from .service import BindFailure, serve

    try:
        service = serve(cfg)
    except (ConfigInvalid, BindFailure) as exc:
        return _fail(exc)
    print(f"mirrord listening on {cfg.listen.split(':')[0]}:{service.port}")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


def _read_images(directory):
    images = []
    for name in sorted(os.listdir(directory)):
        if name.rsplit(".", 1)[-1].lower() not in ("pgm", "png"):
            continue
        with open(os.path.join(directory, name), "rb") as fh:
            images.append(imaging.decode_image(fh.read()))
    return images


def main_mirrorctl(argv=None):
    parser = argparse.ArgumentParser(prog="mirrorctl",
                                     description="mirror operator tooling")
    sub = parser.add_subparsers(dest="command", required=True)

    enroll_p = sub.add_parser("enroll", help="enroll a user from face crops")
    enroll_p.add_argument("--config", required=True)
    enroll_p.add_argument("--user", required=True)
    enroll_p.add_argument("--name", required=True)
    enroll_p.add_argument("--images", required=True, help="directory of pgm/png crops")

    ident_p = sub.add_parser("identify", help="run recognition over one image")
    ident_p.add_argument("--config", required=True)
    ident_p.add_argument("--image", required=True)

    train_p = sub.add_parser("train-detector", help="train the face/background SVM")
    train_p.add_argument("--positives", required=True)
    train_p.add_argument("--negatives", required=True)
    train_p.add_argument("--out", required=True)
    train_p.add_argument("--window", type=int, default=64)
    train_p.add_argument("--lambda", dest="lambda_", type=float, default=3e-5)
    train_p.add_argument("--epochs", type=int, default=80)
    train_p.add_argument("--seed", type=int, default=3)

    eval_p = sub.add_parser("eval", help="recompute and audit success rates")
    eval_p.add_argument("--trials", required=True)
    eval_p.add_argument("--published", default=None)
    eval_p.add_argument("--out", default=None, help="write the JSON report here")

    args = parser.parse_args(argv)
    try:
        return _dispatch_ctl(args)
    except ConfigInvalid as exc:
        for problem in exc.problems:
            print(f"config: {problem}", file=sys.stderr)
        return 1
    except (OSError, imaging.ImagingError, identity.IdentityError,
            classify.ClassifyError, evalkit.EvalError) as exc:
        return _fail(exc)


def _dispatch_ctl(args):
    if args.command == "enroll":
        cfg = _load_config(args.config)
        face_cfg = HogConfig(cfg.face_window, cfg.face_window)
        if os.path.exists(cfg.database_path):
            db = identity.load_database(cfg.database_path)
        else:
            db = identity.new_database(face_cfg, path=cfg.database_path)
        db.path = cfg.database_path
        images = _read_images(args.images)
        pairs = [(img, imaging.Rect(0, 0, img.width, img.height)) for img in images]
        identity.enroll(db, args.user, args.name, pairs)
        rec = db.record_for(args.user)
        print(f"enrolled {args.user} ({args.name}): "
              f"{len(rec.embeddings)} embeddings on file")
        return 0

    if args.command == "identify":
        cfg = _load_config(args.config)
        model = classify.load_model(cfg.model_path)
        db = identity.load_database(cfg.database_path)
        with open(args.image, "rb") as fh:
            img = imaging.decode_image(fh.read())
        frame = imaging.resize_nearest(img, cfg.frame_width, cfg.frame_height)
        rec = identity.recognize_frame(
            frame, model, HogConfig(cfg.detector_window, cfg.detector_window),
            db, k=cfg.identify_k, accept_dist=cfg.accept_dist,
            scale_step=cfg.scale_step, stride=cfg.stride,
            threshold=cfg.threshold, nms_iou=cfg.nms_iou)
        if rec.kind == "no_face":
            print("no face found")
        elif rec.kind == "unknown":
            print(f"face at {rec.box} (score {rec.score:.2f}): unknown user")
        else:
            print(f"face at {rec.box} (score {rec.score:.2f}): {rec.user_id}")
        return 0

    if args.command == "train-detector":
        window = args.window
        cfg = HogConfig(window, window)
        pos = _read_images(args.positives)
        neg = _read_images(args.negatives)
        if not pos or not neg:
            return _fail("need at least one positive and one negative image")
        def descriptors(images):
            stack = np.stack([
                imaging.resize_nearest(im, window, window).data for im in images
            ])
            return hog_many(stack, cfg)
        X = np.vstack([descriptors(pos), descriptors(neg)])
        y = np.array([1.0] * len(pos) + [-1.0] * len(neg))
        model = classify.svm_train(X, y, lambda_=args.lambda_,
                                   epochs=args.epochs, seed=args.seed)
        classify.save_model(model, args.out)
        scores = X @ model.weights + model.bias
        acc = float(((scores > 0) == (y > 0)).mean())
        print(f"trained on {len(pos)} positives / {len(neg)} negatives, "
              f"training accuracy {acc:.1%}, model -> {args.out}")
        return 0

    if args.command == "eval":
        records = evalkit.ingest_trials(args.trials)
        published = None
        if args.published:
            with open(args.published, "r", encoding="utf-8") as fh:
                published = json.load(fh)
        report = evalkit.aggregate(records, published)
        print(evalkit.render_text(report))
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(report.to_jsonable(), fh, indent=1)
            print(f"\nJSON report -> {args.out}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")
