"""Command grammar and the information providers.

Transcripts parse against a closed rule list (total and deterministic),
then execute against per-user stores and provider snapshots. Providers in
mock mode read bundled fixtures and never touch the network; live-mode
failures fall back to the cache with a staleness flag.
"""

from mirrord import commands
from mirrord.commands import Stores, execute_command, parse_command
from mirrord.providers import default_registry
from mirrord.session import Role

for transcript in ("play despacito on youtube", "set alarm 7 30 am",
                   "what is my daily schedule", "show traffic to airport",
                   "abracadabra"):
    cmd = parse_command(transcript)
    if cmd is None:
        print(f"{transcript!r:<36} -> no match")
    else:
        print(f"{transcript!r:<36} -> {cmd.intent} {cmd.args} "
              f"[feature {cmd.feature.value}]")
print()

stores = Stores()
registry = default_registry()
ada = Role.authenticated("ada")

out = execute_command(parse_command("set alarm 7 am"), ada, stores, registry, now=0.0)
print("alarm:", out.speech_text)
out = execute_command(parse_command("add todo water the plants"), ada, stores,
                      registry, now=1.0)
print("todo:", out.speech_text)
out = execute_command(parse_command("show daily schedule"), ada, stores,
                      registry, now=2.0)
print("schedule:", out.speech_text, out.ui_patch["schedule"])
out = execute_command(parse_command("show traffic"), ada, stores, registry, now=3.0)
print("traffic:", out.speech_text, "(stale)" if out.stale else "(fresh)")
print()

print("provider snapshots for each role:")
for role in (Role.general(), ada):
    snaps = registry.refresh_all(role, now=10.0)
    print(f"  {role.kind:<13} -> {[s.provider_id for s in snaps]}")
