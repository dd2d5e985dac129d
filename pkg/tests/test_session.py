import itertools

import pytest

from mirrord import session
from mirrord.commands import Command
from mirrord.session import (
    AUTHENTICATED_FEATURES, GENERAL_FEATURES, CommandIssued, ConnectivityDown,
    ConnectivityUp, Denied, Execute, Feature, NotifyUI, RecognitionEvent,
    RefreshProviders, Role, SessionConfig, SessionState, State, Tick,
    feature_allowed, step,
)

CFG = SessionConfig(idle_timeout=30.0)


def cmd_for(feature):
    return Command(intent="probe", feature=feature, args={}, raw="probe")


def drive(events, start=None, t0=1000.0, dt=1.0):
    state = start or SessionState()
    now = t0
    out = []
    for ev in events:
        state, effects = step(state, ev, now, CFG)
        out.append((state, effects))
        now += dt
    return state, out


class TestAccessMatrix:
    def test_exact_tier_sizes(self):
        assert len(GENERAL_FEATURES) == 9
        assert len(AUTHENTICATED_FEATURES) == 5
        assert len(Feature) == 14
        assert set(GENERAL_FEATURES) | set(AUTHENTICATED_FEATURES) == set(Feature)
        assert not set(GENERAL_FEATURES) & set(AUTHENTICATED_FEATURES)

    def test_table_cells(self):
        g = Role.general()
        a = Role.authenticated("u1")
        assert not feature_allowed(g, Feature.GMAIL)
        assert feature_allowed(g, Feature.WEATHER)
        assert feature_allowed(a, Feature.TRAFFIC_UPDATE)
        # every cell: 9 general allowed to both, 5 authenticated denied to general
        for f in GENERAL_FEATURES:
            assert feature_allowed(g, f) and feature_allowed(a, f)
        for f in AUTHENTICATED_FEATURES:
            assert not feature_allowed(g, f)
            assert feature_allowed(a, f)

    def test_superset_law(self):
        for f in Feature:
            if feature_allowed(Role.general(), f):
                assert feature_allowed(Role.authenticated("x"), f)


class TestTransitions:
    def test_connectivity_down_from_anywhere(self):
        for start in self.representative_states():
            new, _ = step(start, ConnectivityDown(), 0.0, CFG)
            assert new.state is State.CONNECTIVITY_CHECK
            assert not new.connectivity

    def test_down_in_connectivity_check_is_silent(self):
        s = SessionState(state=State.CONNECTIVITY_CHECK)
        new, effects = step(s, ConnectivityDown(), 0.0, CFG)
        assert new.state is State.CONNECTIVITY_CHECK
        assert effects == []

    def test_up_moves_to_watching(self):
        for start_state in (State.BOOT, State.CONNECTIVITY_CHECK):
            s = SessionState(state=start_state)
            new, _ = step(s, ConnectivityUp(), 0.0, CFG)
            assert new.state is State.WATCHING and new.connectivity

    def test_unknown_in_watching_starts_general_session(self):
        s = SessionState(state=State.WATCHING, connectivity=True)
        new, effects = step(s, RecognitionEvent("unknown"), 5.0, CFG)
        assert new.state is State.GENERAL_SESSION
        assert RefreshProviders() in effects

    def test_identified_from_watching(self):
        s = SessionState(state=State.WATCHING, connectivity=True)
        new, effects = step(s, RecognitionEvent("identified", "u1"), 5.0, CFG)
        assert new.state is State.AUTHENTICATED_SESSION and new.user_id == "u1"
        assert NotifyUI("authenticated") in effects
        assert RefreshProviders() in effects

    def test_identified_switches_user(self):
        s = SessionState(state=State.AUTHENTICATED_SESSION, user_id="u1",
                         connectivity=True)
        new, _ = step(s, RecognitionEvent("identified", "u2"), 5.0, CFG)
        assert new.state is State.AUTHENTICATED_SESSION and new.user_id == "u2"

    def test_recognition_ignored_offline(self):
        s = SessionState(state=State.CONNECTIVITY_CHECK, connectivity=False)
        new, effects = step(s, RecognitionEvent("identified", "u1"), 5.0, CFG)
        assert new.state is State.CONNECTIVITY_CHECK
        assert effects == []

    def test_liveness_two_steps(self):
        state, trail = drive([ConnectivityUp(), RecognitionEvent("identified", "u9")])
        assert state.state is State.AUTHENTICATED_SESSION
        assert state.user_id == "u9"
        assert len(trail) == 2

    def test_denied_command_keeps_state(self):
        s = SessionState(state=State.GENERAL_SESSION, connectivity=True)
        new, effects = step(s, CommandIssued(cmd_for(Feature.TODO_LIST)), 5.0, CFG)
        assert new == s
        assert len(effects) == 1 and isinstance(effects[0], Denied)

    def test_allowed_command_executes(self):
        s = SessionState(state=State.GENERAL_SESSION, connectivity=True)
        _, effects = step(s, CommandIssued(cmd_for(Feature.ALARM)), 5.0, CFG)
        assert effects == [Execute(cmd_for(Feature.ALARM))]

    def test_command_while_offline_denied(self):
        s = SessionState(state=State.BOOT)
        _, effects = step(s, CommandIssued(cmd_for(Feature.TIME)), 5.0, CFG)
        assert isinstance(effects[0], Denied) and effects[0].reason == "offline"

    @staticmethod
    def representative_states():
        return [
            SessionState(),
            SessionState(state=State.CONNECTIVITY_CHECK),
            SessionState(state=State.WATCHING, connectivity=True),
            SessionState(state=State.DETECTING, connectivity=True),
            SessionState(state=State.GENERAL_SESSION, connectivity=True,
                         session_started=1.0),
            SessionState(state=State.AUTHENTICATED_SESSION, user_id="u1",
                         connectivity=True, session_started=1.0),
        ]


class TestHysteresis:
    def test_single_unknown_never_downgrades(self):
        s = SessionState(state=State.AUTHENTICATED_SESSION, user_id="u1",
                         connectivity=True, session_started=0.0)
        s1, effects = step(s, RecognitionEvent("unknown"), 10.0, CFG)
        assert s1.state is State.AUTHENTICATED_SESSION and s1.user_id == "u1"
        assert effects == []
        # an immediate tick does not downgrade either
        s2, _ = step(s1, Tick(), 10.5, CFG)
        assert s2.state is State.AUTHENTICATED_SESSION

    def test_sustained_unknown_downgrades_after_timeout(self):
        s = SessionState(state=State.AUTHENTICATED_SESSION, user_id="u1",
                         connectivity=True, session_started=0.0)
        s, _ = step(s, RecognitionEvent("unknown"), 10.0, CFG)
        s, _ = step(s, RecognitionEvent("unknown"), 25.0, CFG)
        s, _ = step(s, Tick(), 39.9, CFG)
        assert s.state is State.AUTHENTICATED_SESSION  # 29.9 s elapsed
        s, effects = step(s, Tick(), 40.0, CFG)
        assert s.state is State.GENERAL_SESSION and s.user_id is None
        assert RefreshProviders() in effects

    def test_rerecognition_clears_mismatch(self):
        s = SessionState(state=State.AUTHENTICATED_SESSION, user_id="u1",
                         connectivity=True, session_started=0.0)
        s, _ = step(s, RecognitionEvent("unknown"), 10.0, CFG)
        s, _ = step(s, RecognitionEvent("identified", "u1"), 12.0, CFG)
        s, _ = step(s, Tick(), 100.0, CFG)
        assert s.state is State.AUTHENTICATED_SESSION and s.user_id == "u1"

    def test_sustained_no_face_ends_any_session(self):
        for start_state, uid in ((State.GENERAL_SESSION, None),
                                 (State.AUTHENTICATED_SESSION, "u1")):
            s = SessionState(state=start_state, user_id=uid, connectivity=True,
                             session_started=0.0)
            s, _ = step(s, RecognitionEvent("no_face"), 10.0, CFG)
            s, _ = step(s, Tick(), 39.0, CFG)
            assert s.state is start_state
            s, _ = step(s, Tick(), 40.0, CFG)
            assert s.state is State.WATCHING

    def test_face_reappearing_resets_no_face_timer(self):
        s = SessionState(state=State.GENERAL_SESSION, connectivity=True,
                         session_started=0.0)
        s, _ = step(s, RecognitionEvent("no_face"), 10.0, CFG)
        s, _ = step(s, RecognitionEvent("unknown"), 20.0, CFG)
        s, _ = step(s, Tick(), 45.0, CFG)
        assert s.state is State.GENERAL_SESSION


class TestPurity:
    def test_step_is_pure(self):
        events = [ConnectivityUp(), RecognitionEvent("unknown"),
                  CommandIssued(cmd_for(Feature.WEATHER)), Tick(),
                  RecognitionEvent("no_face"), ConnectivityDown()]
        for ev in events:
            for s in TestTransitions.representative_states():
                a = step(s, ev, 42.0, CFG)
                b = step(s, ev, 42.0, CFG)
                assert a == b


class TestSafetyExhaustive:
    def test_no_authenticated_execute_for_general_role(self):
        """Enumerate every state kind x event x feature: an Execute effect
        carrying an authenticated-tier feature requires an authenticated
        session."""
        states = TestTransitions.representative_states()
        recognitions = [RecognitionEvent("no_face"), RecognitionEvent("unknown"),
                        RecognitionEvent("identified", "u1")]
        connectivity = [ConnectivityUp(), ConnectivityDown(), Tick()]
        for s, f in itertools.product(states, Feature):
            _, effects = step(s, CommandIssued(cmd_for(f)), 7.0, CFG)
            for eff in effects:
                if isinstance(eff, Execute) and f in AUTHENTICATED_FEATURES:
                    assert s.role.kind == "authenticated"
                if s.role.kind == "general" and f in AUTHENTICATED_FEATURES:
                    assert isinstance(eff, Denied)
        # two-step reachability: any single event then a command
        for s, pre, f in itertools.product(states, recognitions + connectivity, Feature):
            mid, _ = step(s, pre, 7.0, CFG)
            _, effects = step(mid, CommandIssued(cmd_for(f)), 8.0, CFG)
            for eff in effects:
                if isinstance(eff, Execute) and f in AUTHENTICATED_FEATURES:
                    assert mid.role.kind == "authenticated"

    def test_authenticated_only_reachable_by_identification(self):
        states = TestTransitions.representative_states()
        events = [ConnectivityUp(), ConnectivityDown(), Tick(),
                  RecognitionEvent("no_face"), RecognitionEvent("unknown"),
                  CommandIssued(cmd_for(Feature.TIME))]
        for s, ev in itertools.product(states, events):
            new, _ = step(s, ev, 7.0, CFG)
            if (new.state is State.AUTHENTICATED_SESSION
                    and s.state is not State.AUTHENTICATED_SESSION):
                pytest.fail(f"{ev} reached authenticated session from {s.state}")
