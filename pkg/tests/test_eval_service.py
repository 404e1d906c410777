from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from transcreate.evaluation import RatingsStore, build_instance
from transcreate.evaluation.questions import questions_for, source_question_for
from transcreate.evaluation.service import create_app
from transcreate.evaluation.store import SOURCE_SLOT
from transcreate.imaging import content_digest, solid_png

PIPELINES = ("e2e-instruct", "cap-edit", "cap-retrieve")


@pytest.fixture
def service_setup(tmp_path):
    image_paths = {}
    instances = []
    for i in range(2):
        digests = {}
        for pid in PIPELINES:
            data = solid_png(10, 10, (i * 40 + len(pid), 50, 60))
            digest = content_digest(data)
            path = tmp_path / f"{digest}.png"
            path.write_bytes(data)
            digests[pid] = digest
            image_paths[digest] = path
        source = solid_png(10, 10, (i, i, i))
        source_digest = content_digest(source)
        source_path = tmp_path / f"{source_digest}.png"
        source_path.write_bytes(source)
        image_paths[source_digest] = source_path
        instances.append(build_instance(
            source_digest, digests, seed=i, country="jp", dataset_kind="concept",
            source_path=str(source_path),
            output_paths={pid: str(image_paths[d]) for pid, d in digests.items()},
        ))
    store = RatingsStore(tmp_path / "ratings.jsonl")
    app = create_app(instances, store, image_paths)
    return TestClient(app), instances, store


def _complete_instance(client, payload, rater="r1"):
    """Submit a full set of answers for the blinded payload."""
    body = [{
        "instance_id": payload["instance_id"],
        "rater_id": rater,
        "question_id": payload["source_question"],
        "slot_index": SOURCE_SLOT,
        "value": 2,
    }]
    for slot in payload["slots"]:
        for q in payload["questions"]:
            body.append({
                "instance_id": payload["instance_id"],
                "rater_id": rater,
                "question_id": q["id"],
                "slot_index": slot["slot_index"],
                "value": 4,
            })
    response = client.post("/api/ratings", json=body)
    assert response.status_code == 200
    return response.json()


def test_session_next_returns_blinded_instance(service_setup):
    client, instances, _store = service_setup
    payload = client.get("/api/session/next", params={"rater_id": "r1"}).json()
    assert payload["instance_id"] == instances[0].instance_id
    raw = json.dumps(payload)
    for pid in PIPELINES:
        assert pid not in raw
    assert payload["source"]["label"] == "Image-1"
    assert len(payload["slots"]) == 3


def test_session_assignment_is_idempotent_until_completed(service_setup):
    client, instances, _store = service_setup
    first = client.get("/api/session/next", params={"rater_id": "r1"}).json()
    again = client.get("/api/session/next", params={"rater_id": "r1"}).json()
    assert first["instance_id"] == again["instance_id"]
    _complete_instance(client, first)
    after = client.get("/api/session/next", params={"rater_id": "r1"}).json()
    assert after["instance_id"] == instances[1].instance_id


def test_completion_screen_after_all_instances(service_setup):
    client, _instances, _store = service_setup
    for _ in range(2):
        payload = client.get("/api/session/next", params={"rater_id": "r1"}).json()
        _complete_instance(client, payload)
    done = client.get("/api/session/next", params={"rater_id": "r1"}).json()
    assert done == {"done": True, "progress": {
        "rater_id": "r1", "total": 2, "completed": 2, "skipped": 0, "remaining": 0,
    }}


def test_progress_endpoint(service_setup):
    client, _instances, _store = service_setup
    payload = client.get("/api/session/next", params={"rater_id": "r2"}).json()
    _complete_instance(client, payload, rater="r2")
    progress = client.get("/api/progress", params={"rater_id": "r2"}).json()
    assert progress["completed"] == 1 and progress["remaining"] == 1


def test_invalid_ratings_rejected(service_setup):
    client, instances, _store = service_setup
    bad_value = {
        "instance_id": instances[0].instance_id, "rater_id": "r1",
        "question_id": "C0", "slot_index": 1, "value": 9,
    }
    assert client.post("/api/ratings", json=bad_value).status_code == 422
    wrong_question = {
        "instance_id": instances[0].instance_id, "rater_id": "r1",
        "question_id": "E1", "slot_index": 1, "value": 3,
    }
    assert client.post("/api/ratings", json=wrong_question).status_code == 422
    unknown_instance = {
        "instance_id": "nope", "rater_id": "r1",
        "question_id": "C0", "slot_index": 1, "value": 3,
    }
    assert client.post("/api/ratings", json=unknown_instance).status_code == 404


def test_duplicate_submission_collapses_to_one_logical_record(service_setup):
    client, instances, store = service_setup
    rating = {
        "instance_id": instances[0].instance_id, "rater_id": "r1",
        "question_id": "C0", "slot_index": 1, "value": 3,
    }
    client.post("/api/ratings", json=rating)
    client.post("/api/ratings", json={**rating, "value": 5})
    key = ("r1", instances[0].instance_id, "C0", 1)
    assert store.latest()[key].value == 5
    assert len([r for r in store.history() if r.key == key]) == 2


def test_report_endpoint_returns_aggregate(service_setup):
    client, _instances, _store = service_setup
    payload = client.get("/api/session/next", params={"rater_id": "r1"}).json()
    _complete_instance(client, payload)
    report = client.get("/api/report").json()
    assert report["ratings_total"] > 0
    assert "jp" in report["countries"]


def test_image_serving_by_digest(service_setup):
    client, instances, _store = service_setup
    digest = instances[0].outputs[0].image_digest
    response = client.get(f"/img/{digest}")
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    assert client.get("/img/deadbeef").status_code == 404


def test_skip_with_reason_excludes_instance(service_setup):
    client, instances, _store = service_setup
    first = client.get("/api/session/next", params={"rater_id": "r3"}).json()
    client.post("/api/ratings", json={
        "instance_id": first["instance_id"], "rater_id": "r3",
        "skip": True, "reason": "image failed to load",
    })
    after = client.get("/api/session/next", params={"rater_id": "r3"}).json()
    assert after["instance_id"] != first["instance_id"]
    progress = client.get("/api/progress", params={"rater_id": "r3"}).json()
    assert progress["skipped"] == 1


def test_country_filter(service_setup):
    client, _instances, _store = service_setup
    none_for_brazil = client.get(
        "/api/session/next", params={"rater_id": "r1", "country": "br"}
    ).json()
    assert none_for_brazil["done"] is True


def test_required_answer_set_covers_all_slots(service_setup):
    _client, instances, _store = service_setup
    from transcreate.evaluation.service import _required_keys

    keys = _required_keys(instances[0])
    expected = {(q.id, s.slot_index) for q in questions_for("concept") for s in instances[0].outputs}
    expected.add((source_question_for("concept").id, SOURCE_SLOT))
    assert keys == expected


def test_raters_per_instance_cap(tmp_path):
    from transcreate.evaluation.service import EvalService

    instances = [
        build_instance(f"src{i}", {"cap-edit": f"a{i}", "cap-gen": f"b{i}"},
                       seed=i, country="jp", dataset_kind="concept")
        for i in range(2)
    ]
    store = RatingsStore(tmp_path / "ratings.jsonl")
    service = EvalService(instances, store, raters_per_instance=1)

    first = service.next_for("alice")
    assert first is instances[0]
    # alice stakes a claim with one rating; her assignment stays sticky
    from transcreate.evaluation import Rating, record_rating
    record_rating(store, service.instances, Rating(first.instance_id, "alice", "C0", 1, 3))
    assert service.next_for("alice") is first
    # bob is routed past alice's claim to the second instance
    assert service.next_for("bob") is instances[1]
