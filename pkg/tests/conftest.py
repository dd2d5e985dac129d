import pytest

from mirrord import classify, facegen


@pytest.fixture(scope="session")
def detector_model():
    """The bundled synthetic-corpus detector, trained once per session."""
    return facegen.train_bundled_detector(64)


@pytest.fixture(scope="session")
def model_file(detector_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "detector.svm"
    classify.save_model(detector_model, path)
    return str(path)
