"""Text-command grammar and the local stores it acts on.

Commands arrive as plain lowercase transcripts (speech recognition, when
used at all, happens client-side). The grammar is a closed, ordered list of
keyword-prefix rules, so parsing is total and deterministic: a transcript
yields exactly one Command or NoMatch (None). Rule order resolves the one
deliberate overlap ("show traffic" beats the generic widget rule, which
therefore does not accept "traffic").

Alarm entries are one-shot: an alarm set for time T fires at the first
tick at or after T and never again. To-do and schedule entries keep stable
insertion ids so "complete todo 2" refers to the same entry regardless of
later mutations.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field

from .session import Feature, Role


class CommandError(Exception):
    pass


class StoreUnavailable(CommandError):
    pass


class ProviderUnavailable(CommandError):
    pass


@dataclass(frozen=True)
class Command:
    intent: str
    feature: Feature
    args: dict
    raw: str

    def to_dict(self):
        return {"intent": self.intent, **self.args}


_WIDGET_FEATURES = {
    "time": Feature.TIME,
    "clock": Feature.TIME,
    "weather": Feature.WEATHER,
    "calendar": Feature.CALENDAR,
    "alarms": Feature.ALARM,
    "news": Feature.NEWS_UPDATE,
    "covid": Feature.COVID_UPDATE,
    "youtube": Feature.YOUTUBE,
    "music": Feature.MUSIC,
    "traffic": Feature.TRAFFIC_UPDATE,
    "gmail": Feature.GMAIL,
    "stock": Feature.STOCK_MARKET,
    "todo": Feature.TODO_LIST,
    "notifications": Feature.PHONE_NOTIFICATION,
    "channels": Feature.YOUTUBE_CHANNEL,
}
# "show traffic" belongs to the dedicated traffic rule
_SHOW_WIDGETS = {w for w in _WIDGET_FEATURES if w != "traffic"}
_HIDE_WIDGETS = set(_WIDGET_FEATURES)


def _parse_time(h, m, ap):
    hour = int(h)
    minute = int(m) if m is not None else 0
    if not 1 <= hour <= 12 or not 0 <= minute <= 59:
        return None
    if ap == "am":
        hour = 0 if hour == 12 else hour
    else:
        hour = 12 if hour == 12 else hour + 12
    return f"{hour:02d}:{minute:02d}"


def _play_music(m, raw):
    return Command("play_music", Feature.MUSIC, {"query": m["q"]}, raw)


def _play_youtube(m, raw):
    return Command("play_youtube", Feature.YOUTUBE, {"query": m["q"]}, raw)


def _set_alarm(m, raw):
    hhmm = _parse_time(m["h"], m["m"], m["ap"])
    if hhmm is None:
        return None
    return Command("set_alarm", Feature.ALARM, {"time": hhmm}, raw)


def _cancel_alarm(m, raw):
    return Command("cancel_alarm", Feature.ALARM, {"id": int(m["n"])}, raw)


def _show_traffic(m, raw):
    args = {"route": m["place"]} if m["place"] else {}
    return Command("show_traffic", Feature.TRAFFIC_UPDATE, args, raw)


def _show_schedule(m, raw):
    return Command("show_schedule", Feature.TODO_LIST, {}, raw)


def _add_todo(m, raw):
    return Command("add_todo", Feature.TODO_LIST, {"text": m["text"]}, raw)


def _complete_todo(m, raw):
    return Command("complete_todo", Feature.TODO_LIST, {"index": int(m["n"])}, raw)


def _show_widget(m, raw):
    name = m["w"]
    if name not in _SHOW_WIDGETS:
        return None
    return Command("show_widget", _WIDGET_FEATURES[name], {"name": name}, raw)


def _hide_widget(m, raw):
    name = m["w"]
    if name not in _HIDE_WIDGETS:
        return None
    return Command("hide_widget", _WIDGET_FEATURES[name], {"name": name}, raw)


GRAMMAR = [
    ("play music <query>", re.compile(r"^play music (?P<q>.+)$"), _play_music),
    ("play <query> on youtube", re.compile(r"^play (?P<q>.+) on youtube$"), _play_youtube),
    ("set alarm <h> [<m>] <am|pm>",
     re.compile(r"^set alarm (?P<h>\d{1,2})(?: (?P<m>\d{1,2}))? (?P<ap>am|pm)$"), _set_alarm),
    ("cancel alarm <n>", re.compile(r"^cancel alarm (?P<n>\d+)$"), _cancel_alarm),
    ("show traffic [to <place>]",
     re.compile(r"^show traffic(?: to (?P<place>.+))?$"), _show_traffic),
    ("what is my daily schedule / show daily schedule",
     re.compile(r"^(?:what is my |show )daily schedule$"), _show_schedule),
    ("add todo <text>", re.compile(r"^add todo (?P<text>.+)$"), _add_todo),
    ("complete todo <n>", re.compile(r"^complete todo (?P<n>\d+)$"), _complete_todo),
    ("show <widget>", re.compile(r"^show (?P<w>[a-z]+)$"), _show_widget),
    ("hide <widget>", re.compile(r"^hide (?P<w>[a-z]+)$"), _hide_widget),
]

MAX_TRANSCRIPT_LEN = 512


def parse_command(transcript: str):
    """First matching grammar rule wins; None means no match."""
    if len(transcript) > MAX_TRANSCRIPT_LEN:
        return None
    text = " ".join(transcript.lower().split())
    for _name, pattern, build in GRAMMAR:
        m = pattern.match(text)
        if m:
            cmd = build(m, transcript)
            if cmd is not None:
                return cmd
    return None


def matching_rules(transcript: str):
    """Names of every rule the transcript satisfies (overlap audits)."""
    text = " ".join(transcript.lower().split())
    hits = []
    for name, pattern, build in GRAMMAR:
        m = pattern.match(text)
        if m and build(m, transcript) is not None:
            hits.append(name)
    return hits


# --- stores -------------------------------------------------------------

GENERAL_USER_KEY = "_general"


@dataclass
class AlarmEntry:
    id: int
    time: str  # "HH:MM", 24h
    next_trigger: float
    fired: bool = False


@dataclass
class TodoEntry:
    id: int
    text: str
    done: bool = False


@dataclass
class ScheduleEntry:
    id: int
    text: str
    at: str  # "HH:MM"


@dataclass
class UserStores:
    alarms: list = field(default_factory=list)
    todos: list = field(default_factory=list)
    schedule: list = field(default_factory=list)
    next_id: int = 1

    def take_id(self):
        nid = self.next_id
        self.next_id += 1
        return nid


class Stores:
    """Per-user alarm/todo/schedule stores, JSON-persisted per user id."""

    def __init__(self, directory=None):
        self.directory = os.fspath(directory) if directory else None
        self._users = {}

    def _path(self, user_id):
        return os.path.join(self.directory, f"{user_id}.json")

    def for_user(self, user_id) -> UserStores:
        if user_id not in self._users:
            self._users[user_id] = self._load(user_id)
        return self._users[user_id]

    def known_users(self):
        """Users with in-memory or persisted stores."""
        users = set(self._users)
        if self.directory and os.path.isdir(self.directory):
            for name in os.listdir(self.directory):
                if name.endswith(".json"):
                    users.add(name[:-5])
        return sorted(users)

    def _load(self, user_id):
        if not self.directory:
            return UserStores()
        try:
            with open(self._path(user_id), "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            return UserStores()
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreUnavailable(f"store for {user_id}: {exc}") from None
        return UserStores(
            alarms=[AlarmEntry(**a) for a in doc.get("alarms", [])],
            todos=[TodoEntry(**t) for t in doc.get("todos", [])],
            schedule=[ScheduleEntry(**s) for s in doc.get("schedule", [])],
            next_id=doc.get("next_id", 1),
        )

    def save(self, user_id):
        if not self.directory:
            return
        os.makedirs(self.directory, exist_ok=True)
        us = self.for_user(user_id)
        doc = {
            "alarms": [vars(a) for a in us.alarms],
            "todos": [vars(t) for t in us.todos],
            "schedule": [vars(s) for s in us.schedule],
            "next_id": us.next_id,
        }
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".store-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh)
            os.replace(tmp, self._path(user_id))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # alarm scheduling: one-shot at the next wall-clock occurrence of HH:MM
    def set_alarm(self, user_id, hhmm, now) -> AlarmEntry:
        us = self.for_user(user_id)
        day = 86400.0
        hour, minute = map(int, hhmm.split(":"))
        midnight = now - (now % day)
        trigger = midnight + hour * 3600 + minute * 60
        if trigger < now:
            trigger += day
        entry = AlarmEntry(id=us.take_id(), time=hhmm, next_trigger=trigger)
        us.alarms.append(entry)
        us.alarms.sort(key=lambda a: (a.next_trigger, a.id))
        self.save(user_id)
        return entry

    def cancel_alarm(self, user_id, alarm_id) -> bool:
        us = self.for_user(user_id)
        before = len(us.alarms)
        us.alarms = [a for a in us.alarms if a.id != alarm_id]
        if len(us.alarms) != before:
            self.save(user_id)
            return True
        return False

    def due_alarms(self, user_id, now):
        """Unfired alarms with trigger <= now; marks them fired (once)."""
        us = self.for_user(user_id)
        due = [a for a in us.alarms if not a.fired and a.next_trigger <= now]
        for a in due:
            a.fired = True
        if due:
            self.save(user_id)
        return due

    def pending_alarms(self, user_id):
        return [a for a in self.for_user(user_id).alarms if not a.fired]

    def add_todo(self, user_id, text) -> TodoEntry:
        us = self.for_user(user_id)
        entry = TodoEntry(id=us.take_id(), text=text)
        us.todos.append(entry)
        self.save(user_id)
        return entry

    def complete_todo(self, user_id, todo_id) -> bool:
        us = self.for_user(user_id)
        for t in us.todos:
            if t.id == todo_id and not t.done:
                t.done = True
                self.save(user_id)
                return True
        return False

    def add_schedule(self, user_id, text, hhmm) -> ScheduleEntry:
        us = self.for_user(user_id)
        entry = ScheduleEntry(id=us.take_id(), text=text, at=hhmm)
        us.schedule.append(entry)
        us.schedule.sort(key=lambda s: (s.at, s.id))
        self.save(user_id)
        return entry


# --- execution ------------------------------------------------------------

@dataclass(frozen=True)
class Outcome:
    speech_text: str
    ui_patch: dict
    ok: bool = True
    stale: bool = False


def _speak_time(hhmm):
    hour, minute = map(int, hhmm.split(":"))
    ap = "am" if hour < 12 else "pm"
    h12 = hour % 12 or 12
    return f"{h12}:{minute:02d} {ap}" if minute else f"{h12} {ap}"


def store_key(role: Role) -> str:
    return role.user_id if role.kind == "authenticated" else GENERAL_USER_KEY


def execute_command(cmd: Command, role: Role, stores: Stores, providers,
                    now: float) -> Outcome:
    """Run an already-authorized command against stores and providers."""
    user = store_key(role)

    if cmd.intent == "set_alarm":
        entry = stores.set_alarm(user, cmd.args["time"], now)
        return Outcome(f"alarm set for {_speak_time(entry.time)}",
                       {"alarm": {"id": entry.id, "time": entry.time}})

    if cmd.intent == "cancel_alarm":
        if stores.cancel_alarm(user, cmd.args["id"]):
            return Outcome(f"alarm {cmd.args['id']} cancelled",
                           {"alarm_cancelled": cmd.args["id"]})
        return Outcome(f"no alarm {cmd.args['id']}", {}, ok=False)

    if cmd.intent == "add_todo":
        entry = stores.add_todo(user, cmd.args["text"])
        return Outcome(f"added to your list: {entry.text}",
                       {"todo": {"id": entry.id, "text": entry.text}})

    if cmd.intent == "complete_todo":
        if stores.complete_todo(user, cmd.args["index"]):
            return Outcome(f"completed item {cmd.args['index']}",
                           {"todo_completed": cmd.args["index"]})
        return Outcome(f"no open item {cmd.args['index']}", {}, ok=False)

    if cmd.intent == "show_schedule":
        us = stores.for_user(user)
        todos = [{"id": t.id, "text": t.text} for t in us.todos if not t.done]
        plan = [{"id": s.id, "text": s.text, "at": s.at} for s in us.schedule]
        count = len(todos) + len(plan)
        return Outcome(f"you have {count} item{'s' if count != 1 else ''} today",
                       {"schedule": {"todos": todos, "planned": plan}})

    if cmd.intent == "show_traffic":
        if providers is None:
            raise ProviderUnavailable("no provider registry configured")
        snapshot = providers.snapshot("traffic", now)
        route = cmd.args.get("route")
        payload = dict(snapshot.payload)
        if route:
            payload["requested_route"] = route
        speech = f"{payload.get('route', 'your route')}: {payload.get('status', '?')}"
        if snapshot.stale:
            speech += " (cached)"
        return Outcome(speech, {"traffic": payload}, stale=snapshot.stale)

    if cmd.intent == "play_youtube":
        return Outcome(f"playing {cmd.args['query']} on youtube",
                       {"play": {"kind": "youtube", "query": cmd.args["query"]}})

    if cmd.intent == "play_music":
        return Outcome(f"playing {cmd.args['query']}",
                       {"play": {"kind": "music", "query": cmd.args["query"]}})

    if cmd.intent == "show_widget":
        return Outcome(f"showing {cmd.args['name']}",
                       {"widget": {"name": cmd.args["name"], "visible": True}})

    if cmd.intent == "hide_widget":
        return Outcome(f"hiding {cmd.args['name']}",
                       {"widget": {"name": cmd.args["name"], "visible": False}})

    raise ValueError(f"unhandled intent {cmd.intent!r}")
