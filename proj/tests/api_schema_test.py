"""Runs the HTTP server and validates every response against docs/api.schema.json."""
import json
import os
import re
import subprocess
from pathlib import Path

import pytest
import requests
from jsonschema import Draft202012Validator

ROOT = Path(__file__).resolve().parent.parent
BIN = os.environ.get("CONSTRUE_BIN", str(ROOT / "build/tools/construe"))
PACKS = os.environ.get("CONSTRUE_PACKS", str(ROOT / "packs"))
SCHEMA = json.loads((ROOT / "docs/api.schema.json").read_text())
Draft202012Validator.check_schema(SCHEMA)

STORY = "Kaupungit eivät ole muuttuneet energiatehokkaammiksi. Maija kertoi vanhempien asuvan kaupungissa.\n\nKokki lisää keittoon suolaa."


def check(response, definition, status):
    assert response.status_code == status, response.text
    body = response.json()
    schema = {"$ref": f"#/$defs/{definition}", "$defs": SCHEMA["$defs"]}
    errors = list(Draft202012Validator(schema).iter_errors(body))
    assert not errors, f"{definition}: {errors[0].message} at {list(errors[0].absolute_path)}"
    return body


@pytest.fixture(scope="module")
def server(tmp_path_factory):
    data = tmp_path_factory.mktemp("data")
    proc = subprocess.Popen([BIN, "serve", "--packs-dir", PACKS, "--data", str(data), "--port", "0"],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    line = proc.stdout.readline()
    match = re.search(r"(http://\S+/api/v1)", line)
    if not match:
        proc.kill()
        pytest.fail(f"server did not start: {line} {proc.stderr.read()}")
    yield match.group(1)
    proc.terminate()
    proc.wait(timeout=10)


class Client:
    def __init__(self, base, token=None):
        self.base, self.token = base, token

    def __call__(self, method, path, body=None, **params):
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        return requests.request(method, self.base + path, json=body, params=params or None, headers=headers, timeout=30)


def new_user(base, name, role="learner"):
    anon = Client(base)
    user = check(anon("POST", "/users", {"name": name, "role": role}), "new_user", 201)
    return Client(base, user["token"]), user["id"]


def test_public_endpoints(server):
    anon = Client(server)
    check(anon("GET", "/health"), "health", 200)
    langs = check(anon("GET", "/languages"), "languages", 200)
    assert {l["language"] for l in langs["languages"]} == {"fi", "ru", "de"}
    check(anon("GET", "/me"), "error", 401)
    check(anon("POST", "/users", {"role": "learner"}), "error", 400)
    assert requests.options(server + "/stories", timeout=10).headers["Access-Control-Allow-Origin"] == "*"


def test_learner_flow(server):
    me, uid = new_user(server, "ann")
    check(me("GET", "/me"), "me", 200)
    check(me("PUT", "/me/level", {"language": "fi", "cefr": "B1"}), "level", 200)
    check(me("PUT", "/me/level", {"language": "fi", "cefr": "Z9"}), "error", 400)
    check(me("GET", "/translate", language="fi", word="otettava"), "translation", 200)

    story = check(me("POST", "/stories", {"language": "fi", "title": "t", "text": STORY}), "story", 201)
    check(me("POST", "/stories", {"language": "xx", "text": "x"}), "error", 400)
    check(me("POST", "/stories", {"language": "fi", "text": " "}), "error", 400)
    check(me("GET", "/stories"), "stories", 200)
    check(me("GET", f"/stories/{story['id']}"), "story", 200)
    preview = check(me("GET", f"/stories/{story['id']}/preview"), "preview", 200)
    assert any(t["constructs"] for t in preview["tokens"])
    check(me("PUT", f"/stories/{story['id']}/visibility", {"visibility": "public"}), "story", 200)

    session = check(me("POST", f"/stories/{story['id']}/sessions", density=2, seed=5), "session", 201)
    assert any(t["surface"] is None for t in session["tokens"])
    for ex in session["exercises"]:
        path = f"/sessions/{session['id']}/exercises/{ex['id']}"
        check(me("POST", path + "/hint"), "outcome", 200)
        wrong = check(me("POST", path + "/answer", {"answer": "qwerty"}), "outcome", 200)
        assert wrong["answer"] is None
        for _ in range(3):
            last = check(me("POST", path + "/answer", {"answer": "qwerty"}), "outcome", 200)
        assert last["exhausted"] and last["answer"]
        check(me("POST", path + "/answer", {"answer": "x"}), "error", 409)
    done = check(me("GET", f"/sessions/{session['id']}"), "session", 200)
    assert all(t["surface"] is not None for t in done["tokens"])
    check(me("GET", "/sessions/x999"), "error", 404)

    progress = check(me("GET", "/progress", language="fi"), "progress", 200)
    assert progress["constructs"]

    placement = check(me("POST", "/placement", {"language": "fi"}), "placement", 201)
    while not placement["finished"]:
        placement = check(me("POST", f"/placement/{placement['id']}/answer", {"answer": "qwerty"}), "placement", 200)
    assert placement["theta"] < 0
    check(me("GET", f"/placement/{placement['id']}"), "placement", 200)
    check(me("POST", "/placement", {"language": "xx"}), "error", 400)


def test_groups_and_privacy(server):
    teacher, _ = new_user(server, "tea", "teacher")
    learner, lid = new_user(server, "lea")
    outsider, oid = new_user(server, "out")
    check(learner("POST", "/groups", {"name": "x"}), "error", 403)
    group = check(teacher("POST", "/groups", {"name": "class"}), "group", 201)
    check(teacher("POST", f"/groups/{group['id']}/invitations", {"learner": lid}), "group", 201)
    check(teacher("GET", f"/groups/{group['id']}/members/{lid}/progress", language="fi"), "error", 403)
    check(learner("POST", f"/groups/{group['id']}/accept"), "group", 200)
    check(learner("GET", "/groups"), "groups", 200)
    check(teacher("GET", f"/groups/{group['id']}/members/{lid}/progress", language="fi"), "progress", 200)
    check(teacher("GET", f"/groups/{group['id']}/members/{oid}/progress", language="fi"), "error", 403)
    check(teacher("GET", f"/groups/{group['id']}/progress", language="fi"), "group_progress", 200)
    check(outsider("GET", f"/groups/{group['id']}/progress", language="fi"), "error", 403)

    story = check(teacher("POST", "/stories", {"language": "de", "text": "Er kam aus dem Haus."}), "story", 201)
    check(learner("GET", f"/stories/{story['id']}"), "error", 403)
    check(teacher("POST", f"/groups/{group['id']}/stories", {"story": story["id"]}), "group", 201)
    assert check(learner("GET", f"/stories/{story['id']}"), "story", 200)["visibility"] == "group"
    check(outsider("GET", f"/stories/{story['id']}/preview"), "error", 403)


def test_fields_used_by_the_browser_client(server):
    me, _ = new_user(server, "viewer")
    story = check(me("POST", "/stories", {"language": "fi", "text": STORY}), "story", 201)
    preview = check(me("GET", f"/stories/{story['id']}/preview"), "preview", 200)
    # Candidates, chunk spans and a construct list that maps back to highlighted tokens.
    assert any(t["candidate"] for t in preview["tokens"])
    assert {c["kind"] for c in preview["chunks"]} >= {"NounPhrase", "AnalyticVerb"}
    listed = {c["id"] for c in preview["constructs"]}
    assert listed == {i["construct"] for i in preview["instances"]}
    for inst in preview["instances"]:
        for t in inst["tokens"]:
            assert inst["construct"] in preview["tokens"][t]["constructs"]

    session = check(me("POST", f"/stories/{story['id']}/sessions", density=3, seed=1), "session", 201)
    ex = max(session["exercises"], key=lambda e: e["hint_count"])
    assert ex["lemma"]
    assert ex["hint_count"] >= 4
    path = f"/sessions/{session['id']}/exercises/{ex['id']}"
    for expected in (4, 3, 2, 1):
        assert check(me("POST", path + "/hint"), "outcome", 200)["hearts"] == expected
    view = check(me("GET", f"/sessions/{session['id']}"), "session", 200)
    state = next(e for e in view["exercises"] if e["id"] == ex["id"])["state"]
    assert state["hearts"] == 1 and len(state["hints"]) == 4
