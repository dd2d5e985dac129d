import numpy as np
import pytest

from mirrord import classify, facegen
from mirrord.classify import Detection, LinearSvmModel
from mirrord.hog import HogConfig
from mirrord.imaging import GrayImage, Rect

from oracles import best_linear_accuracy, hinge_objective

FACE64 = HogConfig(64, 64)

XOR_POINTS = [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)]
XOR_LABELS = [1, 1, -1, -1]


def blob_pair(seed=0, n=40):
    rng = np.random.default_rng(seed)
    a = rng.normal((2.0, 2.0), 0.5, (n, 2))
    b = rng.normal((-2.0, -2.0), 0.5, (n, 2))
    X = np.vstack([a, b])
    y = np.array([1.0] * n + [-1.0] * n)
    return X, y


@pytest.fixture()
def detector(detector_model):
    return detector_model


class TestKernel:
    def test_dot_product(self):
        assert classify.kernel_eval([1, 2], [3, 4]) == 11.0

    def test_self_kernel_is_norm_squared(self):
        assert classify.kernel_eval([3, 4], [3, 4]) == 25.0

    def test_orthogonal(self):
        assert classify.kernel_eval([1, 0], [0, 1]) == 0.0

    def test_dim_mismatch(self):
        with pytest.raises(classify.DimensionMismatch):
            classify.kernel_eval([1, 2], [1, 2, 3])

    def test_symmetry_and_linearity(self):
        rng = np.random.default_rng(20)
        for _ in range(100):
            a = rng.normal(size=8)
            b = rng.normal(size=8)
            alpha = float(rng.normal())
            kab = classify.kernel_eval(a, b)
            assert classify.kernel_eval(b, a) == kab
            scaled = classify.kernel_eval(alpha * a, b)
            assert abs(scaled - alpha * kab) <= 1e-12 * max(1.0, abs(alpha * kab))


class TestSvmTrain:
    def test_two_point_separable(self):
        model = classify.svm_train([[1.0, 0.0], [-1.0, 0.0]], [1, -1],
                                   lambda_=0.01, epochs=100, seed=0)
        assert classify.svm_score(model, [1.0, 0.0]) > 0
        assert classify.svm_score(model, [-1.0, 0.0]) <= 0

    def test_xor_capped_at_75(self):
        # no half-plane classifies more than 3 of the 4 XOR points
        assert best_linear_accuracy(XOR_POINTS, XOR_LABELS) == 0.75
        model = classify.svm_train(XOR_POINTS, XOR_LABELS,
                                   lambda_=0.01, epochs=200, seed=1)
        preds = [1 if classify.svm_score(model, p) > 0 else -1 for p in XOR_POINTS]
        acc = sum(p == y for p, y in zip(preds, XOR_LABELS)) / 4
        assert acc <= 0.75

    def test_blobs_fully_separated_and_loss_decreases(self):
        X, y = blob_pair(seed=21)
        checkpoints = {}
        for epochs in (5, 25, 100):
            model = classify.svm_train(X, y, lambda_=0.01, epochs=epochs, seed=2)
            checkpoints[epochs] = hinge_objective(
                model.weights.tolist(), model.bias, 0.01, X.tolist(), y.tolist()
            )
        model = classify.svm_train(X, y, lambda_=0.01, epochs=100, seed=2)
        scores = X @ model.weights + model.bias
        assert np.all((scores > 0) == (y > 0))
        assert checkpoints[100] <= checkpoints[25] <= checkpoints[5]

    def test_determinism_bit_exact(self):
        X, y = blob_pair(seed=22)
        m1 = classify.svm_train(X, y, lambda_=0.05, epochs=40, seed=7)
        m2 = classify.svm_train(X, y, lambda_=0.05, epochs=40, seed=7)
        assert np.array_equal(m1.weights, m2.weights)
        assert m1.bias == m2.bias

    def test_objective_beats_zero_model(self):
        # zero model objective is exactly 1.0 (unit hinge everywhere)
        for seed in range(4):
            X, y = blob_pair(seed=seed)
            model = classify.svm_train(X, y, lambda_=0.01, epochs=50, seed=seed)
            obj = hinge_objective(model.weights.tolist(), model.bias, 0.01,
                                  X.tolist(), y.tolist())
            assert obj <= 1.0

    def test_single_class_rejected(self):
        with pytest.raises(classify.DegenerateInput):
            classify.svm_train([[1.0], [2.0]], [1, 1])

    def test_library_objective_matches_oracle(self):
        X, y = blob_pair(seed=23)
        model = classify.svm_train(X, y, lambda_=0.02, epochs=30, seed=5)
        ours = classify.hinge_objective(model, X, y)
        ref = hinge_objective(model.weights.tolist(), model.bias, 0.02,
                              X.tolist(), y.tolist())
        assert ours == pytest.approx(ref, rel=1e-12)


class TestSvmScore:
    def test_zero_model(self):
        model = LinearSvmModel(np.zeros(3), 0.0, 1.0, 0)
        assert classify.svm_score(model, [5.0, -2.0, 7.0]) == 0.0

    def test_known_value(self):
        model = LinearSvmModel(np.array([1.0, 1.0]), -1.0, 1.0, 0)
        assert classify.svm_score(model, [1.0, 1.0]) == 1.0

    def test_matches_kernel_eval(self):
        rng = np.random.default_rng(24)
        w = rng.normal(size=6)
        model = LinearSvmModel(w, 0.25, 1.0, 0)
        for _ in range(20):
            x = rng.normal(size=6)
            assert classify.svm_score(model, x) == pytest.approx(
                classify.kernel_eval(w, x) + 0.25, rel=1e-12
            )

    def test_sign_invariance_under_positive_scaling(self):
        rng = np.random.default_rng(25)
        w = rng.normal(size=4)
        for alpha in (0.5, 2.0, 17.0):
            scaled = LinearSvmModel(alpha * w, alpha * 0.3, 1.0, 0)
            base = LinearSvmModel(w, 0.3, 1.0, 0)
            for _ in range(10):
                x = rng.normal(size=4)
                s0 = classify.svm_score(base, x)
                s1 = classify.svm_score(scaled, x)
                assert (s0 > 0) == (s1 > 0)


class TestModelFile:
    def test_roundtrip(self, tmp_path):
        X, y = blob_pair(seed=26)
        model = classify.svm_train(X, y, lambda_=0.03, epochs=20, seed=9)
        path = tmp_path / "model.svm"
        classify.save_model(model, path)
        back = classify.load_model(path)
        assert np.array_equal(back.weights, model.weights)
        assert back.bias == model.bias
        assert back.lambda_ == model.lambda_ and back.epochs == model.epochs
        header = path.read_text().splitlines()[0]
        assert header.startswith("svmlinear v1 dim=2 lambda=")

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.svm"
        path.write_text("not a model\n")
        with pytest.raises(classify.MalformedModelFile):
            classify.load_model(path)


class TestIou:
    def test_disjoint(self):
        assert classify.iou(Rect(0, 0, 4, 4), Rect(10, 10, 4, 4)) == 0.0

    def test_identical(self):
        assert classify.iou(Rect(1, 2, 5, 5), Rect(1, 2, 5, 5)) == 1.0

    def test_half_overlap(self):
        # 4x4 boxes shifted by 2: inter 8, union 24
        assert classify.iou(Rect(0, 0, 4, 4), Rect(2, 0, 4, 4)) == pytest.approx(1 / 3)


class TestNms:
    def test_suppresses_lower_score(self):
        a = Detection(Rect(0, 0, 10, 10), 2.0, 1.0)
        b = Detection(Rect(1, 0, 10, 10), 1.0, 1.0)  # IoU 9/11 = 0.8
        kept = classify.nms([b, a], 0.3)
        assert kept == [a]

    def test_keeps_disjoint(self):
        a = Detection(Rect(0, 0, 10, 10), 2.0, 1.0)
        b = Detection(Rect(50, 50, 10, 10), 1.0, 1.0)
        assert classify.nms([b, a], 0.3) == [a, b]

    def test_tie_breaks_topleft(self):
        a = Detection(Rect(5, 5, 10, 10), 1.0, 1.0)
        b = Detection(Rect(5, 4, 10, 10), 1.0, 1.0)
        kept = classify.nms([a, b], 0.3)
        assert kept[0] is b  # smaller y wins the tie

    def test_output_sorted(self):
        rng = np.random.default_rng(27)
        dets = [
            Detection(Rect(int(x), int(y), 8, 8), float(s), 1.0)
            for x, y, s in zip(
                rng.integers(0, 200, 30), rng.integers(0, 200, 30), rng.random(30)
            )
        ]
        kept = classify.nms(dets, 0.3)
        scores = [d.score for d in kept]
        assert scores == sorted(scores, reverse=True)
        for i, d in enumerate(kept):
            for other in kept[i + 1 :]:
                assert classify.iou(d.box, other.box) <= 0.3


class TestDetector:
    def test_constant_image_no_detections(self, detector):
        img = GrayImage.from_array(np.full((200, 200), 128, dtype=np.uint8))
        # constant windows have zero descriptors, score == bias
        assert detector.bias <= 0.0
        assert classify.detect_faces(img, detector, FACE64) == []

    def test_planted_face_found(self, detector):
        bg = facegen.background_image(3, 480, 360)
        frame = facegen.paste(bg, facegen.face_image(2, 1, 64), 160, 120)
        dets = classify.detect_faces(frame, detector, FACE64)
        assert len(dets) == 1
        assert classify.iou(dets[0].box, Rect(160, 120, 64, 64)) >= 0.5

    def test_nms_consistency_on_frame(self, detector):
        bg = facegen.background_image(1, 480, 360)
        frame = facegen.paste(bg, facegen.face_image(5, 2, 64), 300, 200)
        dets = classify.detect_faces(frame, detector, FACE64, threshold=0.0)
        for i, d in enumerate(dets):
            assert d.box.x >= 0 and d.box.y >= 0
            assert d.box.x + d.box.w <= 480 and d.box.y + d.box.h <= 360
            for other in dets[i + 1 :]:
                assert classify.iou(d.box, other.box) <= 0.3

    def test_model_dim_checked(self, detector):
        img = GrayImage.from_array(np.zeros((128, 128), dtype=np.uint8))
        with pytest.raises(classify.ModelDimensionMismatch):
            classify.detect_faces(img, detector, HogConfig(64, 128))

    def test_window_larger_than_image(self, detector):
        img = GrayImage.from_array(np.zeros((32, 32), dtype=np.uint8))
        with pytest.raises(classify.WindowLargerThanImage):
            classify.detect_faces(img, detector, FACE64)
