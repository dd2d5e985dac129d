"""The session state machine, event by event.

The machine is pure: each step maps (state, event, now) to a new state
plus declarative effects. Connectivity gates everything; recognition
events open general or authenticated sessions; downgrades require the
condition to persist for the idle timeout (one bad frame never logs a
user out).
"""

from mirrord.commands import parse_command
from mirrord.session import (
    CommandIssued, ConnectivityDown, ConnectivityUp, RecognitionEvent,
    Role, SessionConfig, SessionState, Tick, feature_allowed, step,
)

cfg = SessionConfig(idle_timeout=30.0)
state = SessionState()
now = 0.0


def fire(event, label):
    global state, now
    state, effects = step(state, event, now, cfg)
    names = [type(e).__name__ for e in effects]
    print(f"t={now:5.1f}  {label:<42} -> {state.state.value:<22} {names}")
    now += 5.0


print("access matrix samples:")
print("  general + weather :", feature_allowed(Role.general(), parse_command("show weather").feature))
print("  general + todo    :", feature_allowed(Role.general(), parse_command("add todo x").feature))
print()

fire(ConnectivityUp(), "internet comes up")
fire(RecognitionEvent("unknown"), "a face appears, nobody we know")
fire(CommandIssued(parse_command("show weather")), "general user asks for weather")
fire(CommandIssued(parse_command("add todo buy milk")), "general user asks for the to-do list")
fire(RecognitionEvent("identified", "ada"), "ada is recognized")
fire(CommandIssued(parse_command("add todo buy milk")), "ada asks for the to-do list")
fire(RecognitionEvent("unknown"), "one frame mis-recognizes ada")
fire(Tick(), "next tick (well inside the timeout)")
fire(RecognitionEvent("identified", "ada"), "ada is recognized again")
fire(RecognitionEvent("no_face"), "ada walks away")
now += 40.0
fire(Tick(), "40 s later, still nobody")
fire(ConnectivityDown(), "the internet drops")
