"""Authentication state machine and the two-tier feature access matrix.

The machine is a pure function: step(state, event, now, config) returns the
next state plus declarative effects (Execute, Denied, NotifyUI,
RefreshProviders) and performs no I/O itself, which is what makes the
role-safety property checkable by plain enumeration.

Connectivity gates everything: losing it from any state lands back in
ConnectivityCheck and discards the session. Ending or downgrading a session
needs the triggering condition (no face, or an unknown face in an
authenticated session) to persist for idle_timeout, so one mis-recognized
frame never logs a user out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class Feature(enum.Enum):
    # general tier
    TIME = "time"
    WEATHER = "weather"
    CALENDAR = "calendar"
    ALARM = "alarm"
    NEWS_UPDATE = "news_update"
    COVID_UPDATE = "covid_update"
    YOUTUBE = "youtube"
    MUSIC = "music"
    TRAFFIC_UPDATE = "traffic_update"
    # authenticated tier
    GMAIL = "gmail"
    STOCK_MARKET = "stock_market"
    TODO_LIST = "todo_list"
    PHONE_NOTIFICATION = "phone_notification"
    YOUTUBE_CHANNEL = "youtube_channel"


GENERAL_FEATURES = (
    Feature.TIME, Feature.WEATHER, Feature.CALENDAR, Feature.ALARM,
    Feature.NEWS_UPDATE, Feature.COVID_UPDATE, Feature.YOUTUBE,
    Feature.MUSIC, Feature.TRAFFIC_UPDATE,
)
AUTHENTICATED_FEATURES = (
    Feature.GMAIL, Feature.STOCK_MARKET, Feature.TODO_LIST,
    Feature.PHONE_NOTIFICATION, Feature.YOUTUBE_CHANNEL,
)


@dataclass(frozen=True)
class Role:
    kind: str  # "general" | "authenticated"
    user_id: str | None = None

    @classmethod
    def general(cls):
        return cls("general")

    @classmethod
    def authenticated(cls, user_id):
        return cls("authenticated", user_id)


def feature_allowed(role: Role, feature: Feature) -> bool:
    """General users get the general tier; authenticated users get everything."""
    if role.kind == "authenticated":
        return True
    return feature in GENERAL_FEATURES


def allowed_features(role: Role):
    return [f for f in Feature if feature_allowed(role, f)]


class State(str, enum.Enum):
    BOOT = "boot"
    CONNECTIVITY_CHECK = "connectivity_check"
    WATCHING = "watching"
    DETECTING = "detecting"
    GENERAL_SESSION = "general_session"
    AUTHENTICATED_SESSION = "authenticated_session"


SESSION_STATES = (State.GENERAL_SESSION, State.AUTHENTICATED_SESSION)


@dataclass(frozen=True)
class SessionState:
    state: State = State.BOOT
    user_id: str | None = None
    connectivity: bool = False
    last_face_seen: float | None = None
    no_face_since: float | None = None
    mismatch_since: float | None = None
    session_started: float | None = None

    @property
    def role(self) -> Role:
        if self.state is State.AUTHENTICATED_SESSION and self.user_id:
            return Role.authenticated(self.user_id)
        return Role.general()


@dataclass(frozen=True)
class SessionConfig:
    idle_timeout: float = 30.0
    # recognition sampling cadence: 50 fps capped at 5 recognitions/s
    detect_interval: float = 0.2


# --- events -------------------------------------------------------------

@dataclass(frozen=True)
class ConnectivityUp:
    pass


@dataclass(frozen=True)
class ConnectivityDown:
    pass


@dataclass(frozen=True)
class RecognitionEvent:
    outcome: str  # "no_face" | "unknown" | "identified"
    user_id: str | None = None


@dataclass(frozen=True)
class CommandIssued:
    command: object  # commands.Command


@dataclass(frozen=True)
class Tick:
    pass


# --- effects ------------------------------------------------------------

@dataclass(frozen=True)
class Execute:
    command: object


@dataclass(frozen=True)
class Denied:
    command: object
    reason: str


@dataclass(frozen=True)
class NotifyUI:
    info: str


@dataclass(frozen=True)
class RefreshProviders:
    pass


def _enter(state, new, now, **extra):
    return replace(state, state=new, no_face_since=None, mismatch_since=None, **extra)


def step(state: SessionState, event, now: float,
         config: SessionConfig = SessionConfig()):
    """One deterministic transition; returns (new_state, [effects])."""
    effects = []

    if isinstance(event, ConnectivityDown):
        if state.state is State.CONNECTIVITY_CHECK:
            return replace(state, connectivity=False), []
        new = SessionState(state=State.CONNECTIVITY_CHECK, connectivity=False)
        return new, [NotifyUI("offline")]

    if isinstance(event, ConnectivityUp):
        if state.state in (State.BOOT, State.CONNECTIVITY_CHECK):
            new = _enter(state, State.WATCHING, now, connectivity=True,
                         user_id=None, session_started=None)
            return new, [NotifyUI("watching")]
        return replace(state, connectivity=True), []

    if isinstance(event, RecognitionEvent):
        if not state.connectivity:
            return state, []  # no session activity while offline
        if event.outcome == "no_face":
            if state.state in SESSION_STATES:
                since = state.no_face_since if state.no_face_since is not None else now
                return replace(state, no_face_since=since, mismatch_since=None), []
            return state, []
        if event.outcome == "identified":
            if state.state is State.AUTHENTICATED_SESSION and state.user_id == event.user_id:
                return replace(state, last_face_seen=now, no_face_since=None,
                               mismatch_since=None), []
            new = _enter(state, State.AUTHENTICATED_SESSION, now,
                         user_id=event.user_id, last_face_seen=now,
                         session_started=now)
            return new, [NotifyUI("authenticated"), RefreshProviders()]
        if event.outcome == "unknown":
            if state.state in (State.WATCHING, State.DETECTING):
                new = _enter(state, State.GENERAL_SESSION, now, user_id=None,
                             last_face_seen=now, session_started=now)
                return new, [NotifyUI("general"), RefreshProviders()]
            if state.state is State.AUTHENTICATED_SESSION:
                since = state.mismatch_since if state.mismatch_since is not None else now
                return replace(state, last_face_seen=now, no_face_since=None,
                               mismatch_since=since), []
            if state.state is State.GENERAL_SESSION:
                return replace(state, last_face_seen=now, no_face_since=None), []
            return state, []
        raise ValueError(f"unknown recognition outcome {event.outcome!r}")

    if isinstance(event, CommandIssued):
        cmd = event.command
        if not state.connectivity:
            return state, [Denied(cmd, "offline")]
        if feature_allowed(state.role, cmd.feature):
            return state, [Execute(cmd)]
        return state, [Denied(cmd, f"feature {cmd.feature.value} requires sign-in")]

    if isinstance(event, Tick):
        if state.state in SESSION_STATES:
            if (state.no_face_since is not None
                    and now - state.no_face_since >= config.idle_timeout):
                new = _enter(state, State.WATCHING, now, user_id=None,
                             session_started=None)
                return new, [NotifyUI("watching")]
            if (state.state is State.AUTHENTICATED_SESSION
                    and state.mismatch_since is not None
                    and now - state.mismatch_since >= config.idle_timeout):
                new = _enter(state, State.GENERAL_SESSION, now, user_id=None,
                             session_started=now)
                return new, [NotifyUI("general"), RefreshProviders()]
        return state, []

    raise ValueError(f"unknown event {event!r}")
