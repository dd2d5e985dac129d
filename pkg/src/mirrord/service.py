"""The mirror daemon: HTTP API, server-sent event stream, session pump.

All session mutations funnel through post_event() under one lock, so the
state machine sees a serialized event stream no matter how many API
connections are active. Recognition is bounded to two in-flight frames;
anything beyond that, or arriving faster than detect_interval, is shed
with 429 (clients treat that as backpressure, not failure). Command
requests are never shed.

Push transport is plain server-sent events: each connection gets its own
queue and its own gapless seq counter starting at 1.
"""

from __future__ import annotations

import json
import os
import queue
import re
import threading
import time
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from email import message_from_bytes
from email import policy as email_policy
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import classify, commands, identity, imaging, providers as providers_mod
from .config import ConfigInvalid, ServiceConfig, validate
from .hog import HogConfig
from .session import (
    CommandIssued, ConnectivityDown, ConnectivityUp, Denied, Execute, NotifyUI,
    RecognitionEvent, RefreshProviders, Role, SessionConfig, SessionState,
    Tick, allowed_features, feature_allowed, step,
)


class BindFailure(Exception):
    pass


def _iso(ts):
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


def _square_hog(window):
    return HogConfig(window_w=window, window_h=window)


class EventHub:
    """Fan-out of mirror events to any number of SSE subscriber queues."""

    CLOSE = object()

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers = []

    def subscribe(self):
        q = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q):
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, kind, body, at):
        with self._lock:
            targets = list(self._subscribers)
        for q in targets:
            q.put((kind, body, at))

    def close(self):
        with self._lock:
            targets = list(self._subscribers)
            self._subscribers.clear()
        for q in targets:
            q.put(self.CLOSE)


class MirrorService:
    """Owns the model, database, stores, providers, and session state."""

    def __init__(self, config: ServiceConfig, clock=time.time, http_get=None):
        problems = validate(config)
        if problems:
            raise ConfigInvalid(problems)
        self.config = config
        self.clock = clock
        self.detector_cfg = _square_hog(config.detector_window)
        self.face_cfg = _square_hog(config.face_window)

        if not os.path.exists(config.model_path):
            raise ConfigInvalid([f"model_path: {config.model_path} not readable"])
        self.model = classify.load_model(config.model_path)

        os.makedirs(config.data_dir, exist_ok=True)
        if os.path.exists(config.database_path):
            self.db = identity.load_database(config.database_path)
        elif config.bootstrap:
            self.db = identity.new_database(self.face_cfg, path=config.database_path)
            identity.save_database(self.db, config.database_path)
        else:
            raise ConfigInvalid(
                [f"database_path: {config.database_path} missing and bootstrap off"]
            )

        self.stores = commands.Stores(os.path.join(config.data_dir, "stores"))
        self.registry = self._build_registry(http_get)
        self.session_cfg = SessionConfig(idle_timeout=config.idle_timeout,
                                         detect_interval=config.detect_interval)
        self.state = SessionState()
        self._state_lock = threading.Lock()
        self.hub = EventHub()

        self._frame_times = deque()
        self._frame_lock = threading.Lock()
        self._recognition_slots = threading.Semaphore(2)
        self._last_recognition_start = float("-inf")

        self._httpd = None
        self._threads = []
        self._stopping = threading.Event()
        self._sim_online = config.sim_online

    def _build_registry(self, http_get):
        configs = {}
        for pid in self.config.providers:
            configs[pid] = self.config.provider_settings.get(
                pid, providers_mod.ProviderConfig()
            )
        return providers_mod.Registry(configs, http_get=http_get)

    # --- session pump -----------------------------------------------------

    def post_event(self, event, now=None):
        """Serialize one event through the machine; returns the command
        outcomes produced (used by the command API)."""
        now = self.clock() if now is None else now
        with self._state_lock:
            old = self.state
            new_state, effects = step(old, event, now, self.session_cfg)
            self.state = new_state
        outcomes = []
        if (new_state.state, new_state.user_id) != (old.state, old.user_id):
            self.hub.publish("StateChanged", self._session_body(new_state), _iso(now))
        for effect in effects:
            if isinstance(effect, Execute):
                outcomes.append(self._run_command(effect.command, new_state, now))
            elif isinstance(effect, Denied):
                body = {"feature": effect.command.feature.value,
                        "reason": effect.reason, "raw": effect.command.raw}
                self.hub.publish("Denied", body, _iso(now))
                outcomes.append(("denied", body))
            elif isinstance(effect, RefreshProviders):
                self._refresh_providers(new_state.role, now)
            elif isinstance(effect, NotifyUI):
                pass  # state change already published above
        return new_state, outcomes

    def _run_command(self, cmd, state, now):
        try:
            outcome = commands.execute_command(cmd, state.role, self.stores,
                                               self.registry, now)
        except (commands.CommandError, providers_mod.ProviderError) as exc:
            body = {"intent": cmd.intent, "ok": False, "error": str(exc)}
            self.hub.publish("CommandOutcome", body, _iso(now))
            return ("error", body)
        body = {"intent": cmd.intent, "ok": outcome.ok, "stale": outcome.stale,
                "speech_text": outcome.speech_text, "ui_patch": outcome.ui_patch}
        self.hub.publish("CommandOutcome", body, _iso(now))
        return ("executed", body)

    def _refresh_providers(self, role, now):
        for snap in self.registry.refresh_all(role, now):
            self.hub.publish("ProviderUpdated",
                             {"provider_id": snap.provider_id,
                              "stale": snap.stale, "fetched_at": snap.fetched_at},
                             _iso(now))

    def tick(self, now=None):
        now = self.clock() if now is None else now
        self.post_event(Tick(), now)
        for user in self.stores.known_users():
            for alarm in self.stores.due_alarms(user, now):
                self.hub.publish("AlarmFired",
                                 {"id": alarm.id, "time": alarm.time, "user": user},
                                 _iso(now))

    # --- recognition ------------------------------------------------------

    def accept_frame(self, body: bytes, content_type=None):
        """Full frame path. Returns (status, payload) ready for HTTP."""
        now = self.clock()
        with self._frame_lock:
            while self._frame_times and now - self._frame_times[0] >= 1.0:
                self._frame_times.popleft()
            if len(self._frame_times) >= self.config.max_frame_rate:
                return 429, {"error": "rate limited"}
            self._frame_times.append(now)
            if now - self._last_recognition_start < self.config.detect_interval:
                return 429, {"error": "rate limited"}
            if not self._recognition_slots.acquire(blocking=False):
                return 429, {"error": "rate limited"}
            self._last_recognition_start = now
        try:
            fmt = None
            if content_type:
                if "png" in content_type:
                    fmt = "png"
                elif "graymap" in content_type:
                    fmt = "pgm"
            try:
                img = imaging.decode_image(body, format=fmt)
            except imaging.ImagingError as exc:
                return 400, {"error": str(exc)}
            frame = imaging.resize_nearest(img, self.config.frame_width,
                                           self.config.frame_height)
            rec = identity.recognize_frame(
                frame, self.model, self.detector_cfg, self.db,
                k=self.config.identify_k, accept_dist=self.config.accept_dist,
                scale_step=self.config.scale_step, stride=self.config.stride,
                threshold=self.config.threshold, nms_iou=self.config.nms_iou,
            )
        finally:
            self._recognition_slots.release()
        self.post_event(RecognitionEvent(rec.kind, rec.user_id))
        outcome = {"no_face": "NoFace", "unknown": "Unknown",
                   "identified": "Identified"}[rec.kind]
        payload = {"faces_found": rec.faces_found, "outcome": outcome}
        if rec.user_id:
            payload["user_id"] = rec.user_id
        return 200, payload

    # --- documents ----------------------------------------------------------

    def _session_body(self, state):
        return {
            "state": state.state.value,
            "user_id": state.user_id,
            "role": state.role.kind,
            "connectivity": state.connectivity,
        }

    def state_document(self, now=None):
        now = self.clock() if now is None else now
        with self._state_lock:
            state = self.state
        role = state.role
        snapshots = {}
        for pid in self.registry.provider_ids():
            if not feature_allowed(role, self.registry.feature_of(pid)):
                continue
            snap = self.registry.cached(pid, now)
            if snap is not None:
                snapshots[pid] = snap.to_dict()
        pending = [
            {"id": a.id, "time": a.time, "user": user}
            for user in self.stores.known_users()
            for a in self.stores.pending_alarms(user)
        ]
        return {
            "session": {
                "state": state.state.value,
                "user_id": state.user_id,
                "since": _iso(state.session_started) if state.session_started else None,
            },
            "role": role.kind,
            "user_id": role.user_id,
            "connectivity": state.connectivity,
            "allowed_features": [f.value for f in allowed_features(role)],
            "providers": snapshots,
            "pending_alarms": pending,
        }

    def handle_command_text(self, text):
        cmd = commands.parse_command(text)
        if cmd is None:
            return {"outcome": "no_match", "raw": text}
        _state, outcomes = self.post_event(CommandIssued(cmd))
        kind, body = outcomes[0] if outcomes else ("error", {"error": "no effect"})
        return {"outcome": kind, "intent": cmd.intent,
                "feature": cmd.feature.value, **body}

    def enroll_user(self, user_id, display_name, images):
        if self.db.face_geometry != self.face_cfg:
            raise identity.GeometryMismatch(
                "database geometry differs from the configured face geometry"
            )
        pairs = [(img, imaging.Rect(0, 0, img.width, img.height)) for img in images]
        identity.enroll(self.db, user_id, display_name or user_id, pairs)
        rec = self.db.record_for(user_id)
        return {"user_id": user_id, "embeddings": len(rec.embeddings)}

    def set_connectivity(self, up: bool):
        self._sim_online = up
        self.post_event(ConnectivityUp() if up else ConnectivityDown())

    # --- lifecycle ----------------------------------------------------------

    def start(self):
        host, _, port_s = self.config.listen.partition(":")
        try:
            self._httpd = ThreadingHTTPServer((host, int(port_s or 0)),
                                              _make_handler(self))
        except OSError as exc:
            raise BindFailure(f"cannot bind {self.config.listen}: {exc}") from None
        self._httpd.daemon_threads = True
        self.port = self._httpd.server_address[1]

        t = threading.Thread(target=self._httpd.serve_forever, daemon=True,
                             name="mirrord-http")
        t.start()
        self._threads.append(t)
        if self.config.connectivity_mode == "sim":
            if self.config.sim_online:
                self.post_event(ConnectivityUp())
        else:
            p = threading.Thread(target=self._probe_loop, daemon=True,
                                 name="mirrord-probe")
            p.start()
            self._threads.append(p)
        tk = threading.Thread(target=self._tick_loop, daemon=True,
                              name="mirrord-tick")
        tk.start()
        self._threads.append(tk)
        # warm the general-tier dashboard without blocking startup
        threading.Thread(
            target=self._refresh_providers, args=(Role.general(), self.clock()),
            daemon=True,
        ).start()
        return self

    def _probe_loop(self):
        import requests

        while not self._stopping.is_set():
            try:
                resp = requests.head(self.config.probe_url, timeout=3.0)
                up = resp.status_code < 500
            except Exception:
                up = False
            self.post_event(ConnectivityUp() if up else ConnectivityDown())
            if self._stopping.wait(self.config.probe_interval):
                return

    def _tick_loop(self):
        while not self._stopping.wait(self.config.tick_interval):
            self.tick()

    def stop(self):
        self._stopping.set()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        self.hub.close()

    def serve_forever(self):
        try:
            while not self._stopping.wait(3600):
                pass
        except KeyboardInterrupt:
            self.stop()


def serve(config: ServiceConfig, clock=time.time, http_get=None) -> MirrorService:
    """Validate, construct, bind, and start the daemon."""
    return MirrorService(config, clock=clock, http_get=http_get).start()


# --- HTTP plumbing ----------------------------------------------------------

_ENROLL_RE = re.compile(r"^/api/users/([A-Za-z0-9._-]+)/enroll$")


def _make_handler(service: MirrorService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status, payload):
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _body(self):
            length = int(self.headers.get("Content-Length", 0))
            return self.rfile.read(length) if length else b""

        def do_GET(self):
            path, _, query = self.path.partition("?")
            if path == "/api/state":
                return self._send_json(200, service.state_document())
            if path == "/api/features":
                params = dict(p.split("=", 1) for p in query.split("&") if "=" in p)
                role_name = params.get("role", "general")
                if role_name not in ("general", "authenticated"):
                    return self._send_json(400, {"error": f"unknown role {role_name}"})
                role = (Role.authenticated("_query") if role_name == "authenticated"
                        else Role.general())
                return self._send_json(
                    200, {"role": role_name,
                          "features": [f.value for f in allowed_features(role)]})
            if path == "/api/stream":
                return self._stream()
            if service.config.ui_dir and path in ("/", "/index.html"):
                return self._static("index.html")
            if service.config.ui_dir and not path.startswith("/api/"):
                return self._static(path.lstrip("/"))
            return self._send_json(404, {"error": "not found"})

        def do_POST(self):
            path = self.path.partition("?")[0]
            if path == "/api/frame":
                status, payload = service.accept_frame(
                    self._body(), self.headers.get("Content-Type"))
                return self._send_json(status, payload)
            if path == "/api/command":
                try:
                    doc = json.loads(self._body() or b"{}")
                except json.JSONDecodeError:
                    return self._send_json(400, {"error": "invalid JSON"})
                text = (doc.get("text") or "").strip()
                if not text:
                    return self._send_json(400, {"error": "empty text"})
                if len(text) > commands.MAX_TRANSCRIPT_LEN:
                    return self._send_json(400, {"error": "text too long"})
                return self._send_json(200, service.handle_command_text(text))
            match = _ENROLL_RE.match(path)
            if match:
                return self._enroll(match.group(1))
            if path == "/api/sim/connectivity":
                if service.config.connectivity_mode != "sim":
                    return self._send_json(404, {"error": "not in sim mode"})
                try:
                    doc = json.loads(self._body() or b"{}")
                except json.JSONDecodeError:
                    return self._send_json(400, {"error": "invalid JSON"})
                service.set_connectivity(bool(doc.get("up")))
                return self._send_json(200, {"connectivity": bool(doc.get("up"))})
            return self._send_json(404, {"error": "not found"})

        def _enroll(self, user_id):
            ctype = self.headers.get("Content-Type", "")
            if "multipart" not in ctype:
                return self._send_json(400, {"error": "multipart body required"})
            raw = (f"Content-Type: {ctype}\r\nMIME-Version: 1.0\r\n\r\n").encode() + self._body()
            msg = message_from_bytes(raw, policy=email_policy.default)
            display_name = None
            images = []
            for part in msg.iter_parts():
                if part.get_filename():
                    try:
                        images.append(imaging.decode_image(part.get_payload(decode=True)))
                    except imaging.ImagingError as exc:
                        return self._send_json(400, {"error": str(exc)})
                elif part.get_param("name", header="content-disposition") == "display_name":
                    display_name = part.get_payload(decode=True).decode("utf-8", "replace").strip()
            try:
                result = service.enroll_user(user_id, display_name, images)
            except identity.GeometryMismatch as exc:
                return self._send_json(409, {"error": str(exc)})
            except identity.IdentityError as exc:
                return self._send_json(400, {"error": str(exc)})
            return self._send_json(200, result)

        def _stream(self):
            q = service.hub.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Connection", "close")
                self.end_headers()
                seq = 0
                while True:
                    try:
                        item = q.get(timeout=15.0)
                    except queue.Empty:
                        self.wfile.write(b": keepalive\n\n")
                        self.wfile.flush()
                        continue
                    if item is EventHub.CLOSE:
                        return
                    kind, body, at = item
                    seq += 1
                    doc = {"seq": seq, "kind": kind, "body": body, "at": at}
                    self.wfile.write(f"data: {json.dumps(doc)}\n\n".encode())
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                service.hub.unsubscribe(q)

        def _static(self, rel):
            base = os.path.abspath(service.config.ui_dir)
            full = os.path.abspath(os.path.join(base, rel))
            if not full.startswith(base + os.sep) and full != base:
                return self._send_json(404, {"error": "not found"})
            if not os.path.isfile(full):
                return self._send_json(404, {"error": "not found"})
            kind = {"html": "text/html", "js": "text/javascript",
                    "css": "text/css", "json": "application/json",
                    "svg": "image/svg+xml"}.get(full.rsplit(".", 1)[-1],
                                                "application/octet-stream")
            with open(full, "rb") as fh:
                body = fh.read()
            self.send_response(200)
            self.send_header("Content-Type", kind)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler
