import json
import os
from pathlib import Path

import pytest

import ctxd

DATA = Path(os.environ.get("CTXD_TEST_DATA_DIR", Path(__file__).resolve().parents[1]))

MOCK = {
    "rules": [
        {"role": "conversation", "text": "Sure."},
        {"role": "structure", "match": "pivot",
         "text": {"primary_action": "branch", "asset_action": "none", "confidence": 0.9,
                  "reason": "new topic", "asset_reason": "", "show_suggestion": True}},
    ]
}


def test_turns_and_branch_suggestion(tmp_path):
    svc = ctxd.Service(tmp_path, MOCK)
    status, project = svc.call("POST", "/projects", {"title": "smoke"})
    assert status == 200
    pid = project["id"]

    status, turn = svc.call("POST", f"/projects/{pid}/messages", {"text": "hello"})
    assert status == 200
    assert turn["assistant_text"] == "Sure."
    assert turn["suggestion"] is None

    status, turn = svc.call("POST", f"/projects/{pid}/messages", {"text": "let us pivot"})
    sid = turn["suggestion"]["id"]
    status, out = svc.call("POST", f"/suggestions/{sid}/respond", {"action": "accept"})
    assert status == 200

    status, topo = svc.call("GET", f"/projects/{pid}/topology")
    assert len(topo["topology"]["branches"]) == 1
    status, again = svc.call("POST", f"/suggestions/{sid}/respond", {"action": "accept"})
    assert status == 409
    assert again["error"]["code"] == "conflict"


def test_errors_map_to_status(tmp_path):
    svc = ctxd.Service(tmp_path)
    assert svc.call("GET", "/projects/P42")[0] == 404
    assert svc.call("POST", "/projects", "{not json")[0] == 400
    assert svc.call("DELETE", "/projects")[0] == 405


def test_state_survives_restart(tmp_path):
    svc = ctxd.Service(tmp_path, MOCK)
    pid = svc.call("POST", "/projects", {"title": "kept"})[1]["id"]
    svc.call("POST", f"/projects/{pid}/messages", {"text": "hello"})
    before = svc.call("GET", f"/projects/{pid}")[1]

    reopened = ctxd.Service(tmp_path, MOCK)
    assert reopened.call("GET", f"/projects/{pid}")[1] == before


def test_traces_are_jsonl(tmp_path):
    svc = ctxd.Service(tmp_path, MOCK)
    pid = svc.call("POST", "/projects", {"title": "t"})[1]["id"]
    svc.call("POST", f"/projects/{pid}/messages", {"text": "a"})
    svc.call("POST", f"/projects/{pid}/messages", {"text": "b"})
    svc.call("POST", f"/projects/{pid}/scope", {"op": "exclude", "ids": [f"{pid}.n1"]})
    status, text = svc.call("GET", f"/projects/{pid}/traces")
    assert status == 200
    lines = [json.loads(line) for line in text.splitlines()]
    assert [e["kind"] for e in lines] == ["manual_exclude"]
    assert set(lines[0]) == {"id", "kind", "subjects", "compressed_context", "detail", "created_at"}


def test_parse_structure_decision():
    raw = json.dumps({"primary_action": "continue", "asset_action": "none", "confidence": 0.5,
                      "reason": "", "asset_reason": "", "show_suggestion": False})
    assert ctxd.parse_structure_decision(raw)["primary_action"] == "continue"
    with pytest.raises(ctxd.Error, match="parse_error"):
        ctxd.parse_structure_decision(raw.replace("continue", "merge"))


def test_journey_replay_matches_golden(tmp_path):
    complete, snapshot = ctxd.replay(DATA / "fixtures/journey/script.json", tmp_path / "store")
    assert complete
    golden = json.loads((DATA / "golden/journey_snapshot.json").read_text())
    assert snapshot == golden
