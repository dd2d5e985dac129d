"""Flat key=value service configuration.

One `key = value` per line, `#` starts a comment line, `${VAR}` in values
expands from the environment at parse time (used for provider credentials).
emit_config writes every effective key back out, and parse(emit(cfg))
reproduces cfg exactly.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

from .providers import MOCK_ONLY, PROVIDER_FEATURES, ProviderConfig


class ConfigInvalid(Exception):
    """Carries one message per offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


DETECTOR_WINDOW_MIN = 16


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8842"
    data_dir: str = "./mirror-data"
    model_path: str = "./mirror-data/detector.svm"
    database_path: str = "./mirror-data/faces.json"
    bootstrap: bool = True
    frame_width: int = 480
    frame_height: int = 360
    max_frame_rate: int = 50
    detector_window: int = 64
    face_window: int = 64
    identify_k: int = 3
    accept_dist: float = 0.6
    idle_timeout: float = 30.0
    detect_interval: float = 0.2
    scale_step: float = 1.2
    stride: int = 8
    threshold: float = 0.0
    nms_iou: float = 0.3
    connectivity_mode: str = "probe"  # "probe" | "sim"
    probe_url: str = "http://connectivitycheck.gstatic.com/generate_204"
    probe_interval: float = 10.0
    sim_online: bool = False
    tick_interval: float = 1.0
    ui_dir: str = ""
    providers: list = field(default_factory=lambda: list(PROVIDER_FEATURES))
    provider_settings: dict = field(default_factory=dict)  # id -> ProviderConfig


_BOOL_TRUE = {"true", "yes", "on", "1"}
_BOOL_FALSE = {"false", "no", "off", "0"}
_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _expand(value):
    return _VAR.sub(lambda m: os.environ.get(m.group(1), ""), value)


def _coerce(name, kind, raw, problems):
    try:
        if kind is bool:
            low = raw.lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return kind(raw)
    except ValueError as exc:
        problems.append(f"{name}: {exc}")
        return None


def parse_config(text: str) -> ServiceConfig:
    cfg = ServiceConfig()
    problems = []
    kinds = {"listen": str, "data_dir": str, "model_path": str,
             "database_path": str, "bootstrap": bool, "frame_width": int,
             "frame_height": int, "max_frame_rate": int, "detector_window": int,
             "face_window": int, "identify_k": int, "accept_dist": float,
             "idle_timeout": float, "detect_interval": float,
             "scale_step": float, "stride": int, "threshold": float,
             "nms_iou": float, "connectivity_mode": str, "probe_url": str,
             "probe_interval": float, "sim_online": bool,
             "tick_interval": float, "ui_dir": str}

    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            problems.append(f"line {line_no}: expected key = value")
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        value = _expand(raw.strip())

        if key == "providers":
            cfg.providers = [p.strip() for p in value.split(",") if p.strip()]
        elif key.startswith("provider."):
            parts = key.split(".")
            if len(parts) != 3:
                problems.append(f"{key}: expected provider.<id>.<setting>")
                continue
            _, pid, setting = parts
            pc = cfg.provider_settings.setdefault(pid, ProviderConfig())
            if setting == "mode":
                pc.mode = value
            elif setting == "endpoint":
                pc.endpoint = value
            elif setting == "credentials_env":
                pc.credentials_env = value
            elif setting == "ttl":
                pc.ttl = _coerce(key, float, value, problems)
            elif setting == "fixture":
                pc.fixture_path = value
            else:
                problems.append(f"{key}: unknown provider setting")
        elif key in kinds:
            coerced = _coerce(key, kinds[key], value, problems)
            if coerced is not None:
                setattr(cfg, key, coerced)
        else:
            problems.append(f"line {line_no}: unknown key {key!r}")

    problems.extend(validate(cfg))
    if problems:
        raise ConfigInvalid(problems)
    return cfg


def validate(cfg: ServiceConfig):
    problems = []
    if cfg.frame_width < cfg.detector_window or cfg.frame_height < cfg.detector_window:
        problems.append(
            f"frame_width/frame_height: processing resolution "
            f"{cfg.frame_width}x{cfg.frame_height} smaller than detector "
            f"window {cfg.detector_window}"
        )
    if cfg.max_frame_rate < 1:
        problems.append("max_frame_rate: must be >= 1")
    if cfg.detector_window < DETECTOR_WINDOW_MIN or cfg.detector_window % 8:
        problems.append("detector_window: must be a multiple of 8, >= 16")
    if cfg.face_window < DETECTOR_WINDOW_MIN or cfg.face_window % 8:
        problems.append("face_window: must be a multiple of 8, >= 16")
    if cfg.identify_k < 1:
        problems.append("identify_k: must be >= 1")
    if cfg.scale_step <= 1.0:
        problems.append("scale_step: must exceed 1")
    if not 0.0 < cfg.nms_iou < 1.0:
        problems.append("nms_iou: must lie in (0, 1)")
    if cfg.connectivity_mode not in ("probe", "sim"):
        problems.append(f"connectivity_mode: unknown mode {cfg.connectivity_mode!r}")
    if cfg.tick_interval <= 0:
        problems.append("tick_interval: must be positive")
    for pid in cfg.providers:
        if pid not in PROVIDER_FEATURES:
            problems.append(f"providers: unknown provider {pid!r}")
    for pid, pc in cfg.provider_settings.items():
        if pid not in PROVIDER_FEATURES:
            problems.append(f"provider.{pid}: unknown provider")
            continue
        if pc.mode not in ("mock", "live"):
            problems.append(f"provider.{pid}.mode: must be mock or live")
        if pc.mode == "live" and not pc.endpoint:
            problems.append(f"provider.{pid}.endpoint: required in live mode")
        if pc.mode == "live" and pid in MOCK_ONLY:
            problems.append(f"provider.{pid}.mode: provider is mock-only")
    return problems


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: ServiceConfig) -> str:
    lines = []
    for name in ("listen", "data_dir", "model_path", "database_path",
                 "bootstrap", "frame_width", "frame_height", "max_frame_rate",
                 "detector_window", "face_window", "identify_k", "accept_dist",
                 "idle_timeout", "detect_interval", "scale_step", "stride",
                 "threshold", "nms_iou", "connectivity_mode", "probe_url",
                 "probe_interval", "sim_online", "tick_interval", "ui_dir"):
        lines.append(f"{name} = {_fmt(getattr(cfg, name))}")
    lines.append(f"providers = {','.join(cfg.providers)}")
    for pid, pc in cfg.provider_settings.items():
        lines.append(f"provider.{pid}.mode = {pc.mode}")
        if pc.endpoint:
            lines.append(f"provider.{pid}.endpoint = {pc.endpoint}")
        if pc.credentials_env:
            lines.append(f"provider.{pid}.credentials_env = {pc.credentials_env}")
        if pc.ttl is not None:
            lines.append(f"provider.{pid}.ttl = {_fmt(pc.ttl)}")
        if pc.fixture_path:
            lines.append(f"provider.{pid}.fixture = {pc.fixture_path}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ServiceConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
