import http.client
import json
import time

import numpy as np
import pytest
import requests

from mirrord import config as config_mod
from mirrord import facegen, identity, imaging
from mirrord.config import ConfigInvalid, ServiceConfig, emit_config, parse_config
from mirrord.hog import HogConfig
from mirrord.providers import ProviderConfig
from mirrord.session import RecognitionEvent, Tick
from mirrord.service import serve


class TestConfig:
    def test_roundtrip(self):
        cfg = ServiceConfig(listen="0.0.0.0:9000", max_frame_rate=10,
                            connectivity_mode="sim", sim_online=True,
                            providers=["weather", "traffic"],
                            provider_settings={"weather": ProviderConfig(
                                mode="live", endpoint="https://api.example/w",
                                credentials_env="W_KEY", ttl=120.0)})
        assert parse_config(emit_config(cfg)) == cfg

    def test_default_roundtrip(self):
        cfg = ServiceConfig()
        assert parse_config(emit_config(cfg)) == cfg

    def test_env_expansion(self, monkeypatch):
        monkeypatch.setenv("MIRROR_DATA", "/srv/mirror")
        cfg = parse_config("data_dir = ${MIRROR_DATA}/files\n")
        assert cfg.data_dir == "/srv/mirror/files"

    def test_frame_smaller_than_window_rejected(self):
        with pytest.raises(ConfigInvalid) as err:
            parse_config("frame_width = 32\nframe_height = 32\n")
        assert any("detector" in p for p in err.value.problems)

    def test_unknown_key(self):
        with pytest.raises(ConfigInvalid):
            parse_config("nonsense = 1\n")

    def test_unknown_provider(self):
        with pytest.raises(ConfigInvalid):
            parse_config("providers = weather,astrology\n")

    def test_phone_live_rejected(self):
        with pytest.raises(ConfigInvalid):
            parse_config("provider.phone.mode = live\n"
                         "provider.phone.endpoint = https://x\n")

    def test_comments_ignored(self):
        cfg = parse_config("# a comment\nmax_frame_rate = 7\n\n")
        assert cfg.max_frame_rate == 7


def make_service(model_file, tmp_path, **overrides):
    base = dict(
        listen="127.0.0.1:0",
        data_dir=str(tmp_path / "data"),
        model_path=model_file,
        database_path=str(tmp_path / "data" / "faces.json"),
        connectivity_mode="sim",
        sim_online=False,
        detect_interval=0.0,
        tick_interval=600.0,  # ticks driven manually in tests
        frame_width=64,
        frame_height=64,
    )
    base.update(overrides)
    return serve(ServiceConfig(**base))


@pytest.fixture
def svc(model_file, tmp_path):
    service = make_service(model_file, tmp_path)
    yield service
    service.stop()


def url(service, path):
    return f"http://127.0.0.1:{service.port}{path}"


def pgm_bytes(img):
    return imaging.encode_pgm(img)


def post_frame(service, img):
    return requests.post(url(service, "/api/frame"), data=pgm_bytes(img),
                         headers={"Content-Type": "image/x-portable-graymap"},
                         timeout=10)


def enroll_via_api(service, user_id, ident, variants=(0, 1, 2), name="User"):
    files = [
        ("images", (f"f{v}.pgm", pgm_bytes(facegen.face_image(ident, v, 64)),
                    "image/x-portable-graymap"))
        for v in variants
    ]
    return requests.post(url(service, f"/api/users/{user_id}/enroll"),
                         files=files, data={"display_name": name}, timeout=10)


class TestLifecycle:
    def test_bootstrap_creates_database(self, svc, tmp_path):
        assert (tmp_path / "data" / "faces.json").exists()
        doc = svc.state_document()
        assert doc["session"]["state"] == "boot"
        assert doc["connectivity"] is False

    def test_connectivity_sim_reaches_watching(self, svc):
        requests.post(url(svc, "/api/sim/connectivity"), json={"up": True}, timeout=5)
        doc = svc.state_document()
        assert doc["session"]["state"] == "watching"

    def test_missing_model_is_config_error(self, tmp_path):
        cfg = ServiceConfig(model_path=str(tmp_path / "nope.svm"),
                            database_path=str(tmp_path / "faces.json"),
                            data_dir=str(tmp_path))
        with pytest.raises(ConfigInvalid):
            serve(cfg)


class TestRoutes:
    def test_features_general_has_nine(self, svc):
        resp = requests.get(url(svc, "/api/features?role=general"), timeout=5)
        features = resp.json()["features"]
        assert len(features) == 9
        assert "gmail" not in features and "weather" in features

    def test_features_authenticated_has_fourteen(self, svc):
        resp = requests.get(url(svc, "/api/features?role=authenticated"), timeout=5)
        assert len(resp.json()["features"]) == 14

    def test_unknown_route_404(self, svc):
        assert requests.get(url(svc, "/api/wat"), timeout=5).status_code == 404
        assert requests.post(url(svc, "/api/wat"), timeout=5).status_code == 404

    def test_state_document_shape(self, svc):
        doc = requests.get(url(svc, "/api/state"), timeout=5).json()
        for key in ("session", "role", "allowed_features", "providers",
                    "pending_alarms", "connectivity"):
            assert key in doc
        assert doc["role"] == "general"
        assert set(doc["allowed_features"]) == {
            "time", "weather", "calendar", "alarm", "news_update",
            "covid_update", "youtube", "music", "traffic_update"}


class TestFrames:
    def test_blank_frame_no_face(self, svc):
        svc.set_connectivity(True)
        blank = imaging.GrayImage.from_array(np.full((64, 64), 128, dtype=np.uint8))
        resp = post_frame(svc, blank)
        assert resp.status_code == 200
        assert resp.json() == {"faces_found": 0, "outcome": "NoFace"}

    def test_enrolled_face_identified(self, svc):
        svc.set_connectivity(True)
        assert enroll_via_api(svc, "ada", ident=1).status_code == 200
        resp = post_frame(svc, facegen.face_image(1, 4, 64))
        body = resp.json()
        assert body["outcome"] == "Identified" and body["user_id"] == "ada"
        doc = svc.state_document()
        assert doc["session"]["state"] == "authenticated_session"
        assert doc["user_id"] == "ada"

    def test_malformed_body_400(self, svc):
        resp = requests.post(url(svc, "/api/frame"), data=b"not an image",
                             headers={"Content-Type": "image/png"}, timeout=5)
        assert resp.status_code == 400

    def test_rate_limit_and_commands_unaffected(self, model_file, tmp_path):
        service = make_service(model_file, tmp_path, max_frame_rate=3,
                               sim_online=True)
        try:
            blank = imaging.GrayImage.from_array(np.full((64, 64), 100, dtype=np.uint8))
            codes = [post_frame(service, blank).status_code for _ in range(4)]
            assert codes[:3] == [200, 200, 200]
            assert codes[3] == 429
            # command requests are never shed
            resp = requests.post(url(service, "/api/command"),
                                 json={"text": "set alarm 7 am"}, timeout=5)
            assert resp.status_code == 200 and resp.json()["outcome"] == "executed"
        finally:
            service.stop()

    def test_detect_interval_sheds(self, model_file, tmp_path):
        service = make_service(model_file, tmp_path, detect_interval=5.0,
                               sim_online=True)
        try:
            blank = imaging.GrayImage.from_array(np.full((64, 64), 100, dtype=np.uint8))
            assert post_frame(service, blank).status_code == 200
            assert post_frame(service, blank).status_code == 429
        finally:
            service.stop()


class TestCommands:
    def test_general_alarm_allowed(self, svc):
        svc.set_connectivity(True)
        resp = requests.post(url(svc, "/api/command"),
                             json={"text": "set alarm 7 am"}, timeout=5)
        body = resp.json()
        assert body["outcome"] == "executed"
        assert body["speech_text"] == "alarm set for 7 am"

    def test_general_todo_denied(self, svc):
        svc.set_connectivity(True)
        resp = requests.post(url(svc, "/api/command"),
                             json={"text": "add todo buy milk"}, timeout=5)
        body = resp.json()
        assert body["outcome"] == "denied"
        assert body["feature"] == "todo_list"

    def test_no_match(self, svc):
        svc.set_connectivity(True)
        resp = requests.post(url(svc, "/api/command"),
                             json={"text": "abracadabra"}, timeout=5)
        assert resp.json()["outcome"] == "no_match"

    def test_empty_text_400(self, svc):
        resp = requests.post(url(svc, "/api/command"), json={"text": " "}, timeout=5)
        assert resp.status_code == 400

    def test_authenticated_todo_executes(self, svc):
        svc.set_connectivity(True)
        enroll_via_api(svc, "ada", ident=1)
        post_frame(svc, facegen.face_image(1, 3, 64))
        resp = requests.post(url(svc, "/api/command"),
                             json={"text": "add todo buy milk"}, timeout=5)
        assert resp.json()["outcome"] == "executed"
        doc = svc.state_document()
        # provider payloads for authenticated tier are now present
        assert "email" in doc["providers"]


class TestRoleGating:
    def test_general_document_never_carries_authenticated_payloads(self, svc):
        svc.set_connectivity(True)
        enroll_via_api(svc, "ada", ident=1)
        post_frame(svc, facegen.face_image(1, 3, 64))  # authenticated; fills cache
        assert "email" in svc.state_document()["providers"]
        # back to general: sustained no-face for idle_timeout, tick-driven
        now = time.time()
        svc.post_event(RecognitionEvent("no_face"), now=now)
        svc.post_event(Tick(), now=now + svc.config.idle_timeout + 1)
        doc = svc.state_document()
        assert doc["role"] == "general"
        for pid in ("email", "stock", "phone"):
            assert pid not in doc["providers"]  # cached but role-filtered


class TestEnroll:
    def test_enroll_ok(self, svc):
        resp = enroll_via_api(svc, "grace", ident=3, name="Grace")
        assert resp.status_code == 200
        assert resp.json() == {"user_id": "grace", "embeddings": 3}

    def test_enroll_too_few_400(self, svc):
        resp = enroll_via_api(svc, "grace", ident=3, variants=(0, 1))
        assert resp.status_code == 400

    def test_enroll_geometry_mismatch_409(self, model_file, tmp_path):
        # database created under a different face geometry
        other = identity.new_database(HogConfig(48, 48))
        db_path = tmp_path / "data" / "faces.json"
        db_path.parent.mkdir(parents=True)
        identity.save_database(other, db_path)
        service = make_service(model_file, tmp_path)
        try:
            resp = enroll_via_api(service, "grace", ident=3)
            assert resp.status_code == 409
        finally:
            service.stop()


class TestEventStream:
    def read_events(self, service, count, trigger, timeout=10.0, until=None):
        conn = http.client.HTTPConnection("127.0.0.1", service.port, timeout=timeout)
        conn.request("GET", "/api/stream")
        resp = conn.getresponse()
        time.sleep(0.2)  # let the subscription register before triggering
        trigger()
        events = []
        deadline = time.time() + timeout

        def done():
            if until is not None:
                return any(until(e) for e in events)
            return len(events) >= count

        while not done() and time.time() < deadline:
            line = resp.readline()
            if line.startswith(b"data: "):
                events.append(json.loads(line[6:]))
        conn.close()
        return events

    def test_seq_gapless_and_ordered(self, svc):
        def trigger():
            svc.set_connectivity(True)
            requests.post(url(svc, "/api/command"),
                          json={"text": "add todo x"}, timeout=5)  # Denied event
            requests.post(url(svc, "/api/command"),
                          json={"text": "set alarm 6 am"}, timeout=5)

        # startup provider warm-up may interleave extra events; seq must
        # stay gapless regardless
        events = self.read_events(svc, 0, trigger,
                                  until=lambda e: e["kind"] == "CommandOutcome")
        assert [e["seq"] for e in events] == list(range(1, len(events) + 1))
        kinds = [e["kind"] for e in events]
        assert "StateChanged" in kinds
        assert "Denied" in kinds and "CommandOutcome" in kinds

    def test_state_change_event_after_identification(self, svc):
        def trigger():
            svc.set_connectivity(True)
            enroll_via_api(svc, "ada", ident=1)
            post_frame(svc, facegen.face_image(1, 3, 64))

        events = self.read_events(
            svc, 0, trigger,
            until=lambda e: (e["kind"] == "StateChanged"
                             and e["body"]["state"] == "authenticated_session"))
        state_changes = [e for e in events if e["kind"] == "StateChanged"]
        assert state_changes[0]["body"]["state"] == "watching"
        assert state_changes[-1]["body"]["state"] == "authenticated_session"
        assert state_changes[-1]["body"]["user_id"] == "ada"
