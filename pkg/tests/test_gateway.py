"""Gateway endpoints: login, ordered event stream, recommendation intake."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from crisismesh.errors import ConfigError
from crisismesh.gateway import build_app, hash_secret, load_credentials
from crisismesh.scenario import RunEngine, load_scenario, run

CREDS = {"chief": hash_secret("let-me-in")}


def make_client(road_scenario, pause=False):
    engine = RunEngine(road_scenario, pause_at_decision=pause)
    app = build_app(engine, CREDS)
    return TestClient(app), engine, app.state.gateway


def login(client):
    response = client.post("/login", json={"operator": "chief", "secret": "let-me-in"})
    assert response.status_code == 200
    return response.json()["token"]


# -- credentials file ------------------------------------------------------------

def test_load_credentials_parses_lines():
    text = f"# operators\nchief:{hash_secret('pw')}\n"
    assert load_credentials(text) == {"chief": hash_secret("pw")}


def test_load_credentials_rejects_garbage():
    with pytest.raises(ConfigError):
        load_credentials("not-a-credential-line\n")
    with pytest.raises(ConfigError):
        load_credentials("")


# -- authentication ----------------------------------------------------------------

def test_login_issues_token(road_scenario):
    client, _, gateway = make_client(road_scenario)
    token = login(client)
    assert token
    gateway.wait_until_done()


def test_wrong_secret_rejected(road_scenario):
    client, _, gateway = make_client(road_scenario)
    response = client.post("/login", json={"operator": "chief", "secret": "nope"})
    assert response.status_code == 401
    assert response.json()["error"] == "bad-credentials"
    gateway.wait_until_done()


def test_second_login_rejected(road_scenario):
    client, _, gateway = make_client(road_scenario)
    login(client)
    response = client.post("/login", json={"operator": "chief", "secret": "let-me-in"})
    assert response.status_code == 409
    assert response.json()["error"] == "session-exists"
    gateway.wait_until_done()


def test_unauthorized_without_session(road_scenario):
    client, _, gateway = make_client(road_scenario)
    assert client.get("/events").status_code == 401
    assert client.get("/state").status_code == 401
    assert client.post("/recommendation",
                       json={"target": "observer-2", "action": "x"}).status_code == 401
    gateway.wait_until_done()


# -- event stream --------------------------------------------------------------------

def _stream_lines(client, token):
    with client.stream("GET", "/events", headers={"Authorization": f"Bearer {token}"}) as r:
        assert r.status_code == 200
        return list(r.iter_lines())


def test_stream_counts_trace_plus_phases(road_scenario):
    client, engine, gateway = make_client(road_scenario)
    gateway.wait_until_done()
    token = login(client)
    lines = _stream_lines(client, token)
    report = engine.build_report()
    assert len(lines) == len(report.trace) + len(report.phase_log)


def test_stream_is_ordered_and_repeatable(road_scenario):
    client, engine, gateway = make_client(road_scenario)
    gateway.wait_until_done()
    token = login(client)
    first = _stream_lines(client, token)
    second = _stream_lines(client, token)
    assert first == second
    seqs = [json.loads(line)["seq"] for line in first if "seq" in json.loads(line)]
    assert seqs == sorted(seqs) == list(range(1, len(seqs) + 1))


def test_state_snapshot_after_completion(road_scenario):
    client, _, gateway = make_client(road_scenario)
    gateway.wait_until_done()
    token = login(client)
    state = client.get("/state", params={"token": token}).json()
    assert state["phase"] == "Resolved"
    assert state["finished"] is True
    assert state["situation"]["severity"] == 3
    assert {a["id"] for a in state["roster"]} == {
        "decision-maker", "observer-1", "observer-2", "camera-1"}


# -- recommendation submission ----------------------------------------------------------

def wait_for_pause(engine, timeout=5.0):
    import time
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if engine.waiting_for_human:
            return True
        time.sleep(0.01)
    return False


def test_submission_during_pause_resumes_run(road_scenario):
    client, engine, gateway = make_client(road_scenario, pause=True)
    assert wait_for_pause(engine)
    token = login(client)
    state = client.get("/state", params={"token": token}).json()
    assert state["phase"] == "Decision"
    assert state["awaiting_human"] is True

    response = client.post("/recommendation",
                           headers={"Authorization": f"Bearer {token}"},
                           json={"target": "observer-2", "action": "secure the area"})
    assert response.status_code == 200
    seq = response.json()["seq"]
    gateway.wait_until_done()
    report = engine.build_report()
    assert report.final_phase == "Resolved"
    proposes = [r for r in report.trace if r.message.performative.value == "PROPOSE"]
    assert [r.seq for r in proposes] == [seq]
    assert report.recommendations[0].issued_by.value == "HumanDecisionMaker"
    assert report.recommendations[0].target == "observer-2"


def test_submission_wrong_phase_rejected(road_scenario):
    client, engine, gateway = make_client(road_scenario)
    gateway.wait_until_done()
    token = login(client)
    response = client.post("/recommendation",
                           headers={"Authorization": f"Bearer {token}"},
                           json={"target": "observer-2", "action": "x"})
    assert response.status_code == 409
    assert response.json()["error"] == "wrong-phase"


def test_submission_unknown_target_rejected(road_scenario):
    client, engine, gateway = make_client(road_scenario, pause=True)
    assert wait_for_pause(engine)
    token = login(client)
    for target in ("ghost", "decision-maker"):
        response = client.post("/recommendation",
                               headers={"Authorization": f"Bearer {token}"},
                               json={"target": target, "action": "x"})
        assert response.status_code == 404
        assert response.json()["error"] == "unknown-target"
    # unblock the run so the thread exits
    client.post("/recommendation", headers={"Authorization": f"Bearer {token}"},
                json={"target": "observer-2", "action": "go"})
    gateway.wait_until_done()


def test_submitted_target_always_matches_trace_propose():
    """20 random valid submissions: PROPOSE receiver equals the target."""
    import random
    rng = random.Random(112233)
    scenario = load_scenario((Path(__file__).resolve().parent.parent /
                              "scenarios" / "road_accident.scenario").read_text())
    field_agents = ["observer-1", "observer-2", "camera-1"]
    for _ in range(20):
        client, engine, gateway = make_client(scenario, pause=True)
        assert wait_for_pause(engine)
        token = login(client)
        target = rng.choice(field_agents)
        response = client.post("/recommendation",
                               headers={"Authorization": f"Bearer {token}"},
                               json={"target": target, "action": "go"})
        assert response.status_code == 200
        seq = response.json()["seq"]
        gateway.wait_until_done()
        record = next(r for r in engine.bus.trace if r.seq == seq)
        assert record.message.performative.value == "PROPOSE"
        assert record.message.receivers == (target,)


def test_auto_serve_report_equals_cmd_run_report(road_scenario):
    from crisismesh.scenario import replay_check, serialize_report
    client, engine, gateway = make_client(road_scenario)  # auto (no pause)
    gateway.wait_until_done()
    direct = run(road_scenario)
    assert replay_check(engine.build_report(), direct)
    assert serialize_report(engine.build_report()) == serialize_report(direct)
