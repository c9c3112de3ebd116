import pytest
from fastapi.testclient import TestClient

from cognotes.annotations import AnnotationStore
from cognotes.extract import Sequence
from cognotes.server import create_app


def _seq(sid, text, pid="p1"):
    return Sequence(sid, pid, f"n-{sid}", "Memory", 0, 0, len(text), text)


@pytest.fixture
def client(tmp_path):
    store = AnnotationStore([
        _seq("s1", "memory grossly intact"),
        _seq("s2", "memory loss progressive"),
        _seq("s3", "memory clinic brochure"),
    ])
    app = create_app(store, events_path=tmp_path / "events.jsonl")
    return TestClient(app), store


class TestLabelEndpoints:
    def test_fetch_next_by_id(self, client):
        c, _ = client
        resp = c.get("/next")
        assert resp.status_code == 200
        body = resp.json()
        assert body["sequence"]["sequence_id"] == "s1"
        assert body["remaining"] == 3

    def test_submit_label_advances(self, client):
        c, store = client
        resp = c.post("/label", json={
            "sequence_id": "s1", "label": "No", "annotator_id": "alice"
        })
        assert resp.status_code == 200
        assert store.annotations["s1"].label == "No"
        assert c.get("/next").json()["sequence"]["sequence_id"] == "s2"

    def test_conflict_on_stale_submit(self, client):
        c, _ = client
        payload = {"sequence_id": "s1", "label": "No", "annotator_id": "alice"}
        assert c.post("/label", json=payload).status_code == 200
        stale = {**payload, "label": "Yes", "annotator_id": "bob"}
        assert c.post("/label", json=stale).status_code == 409
        assert c.post("/label", json={**stale, "overwrite": True}).status_code == 200

    def test_unknown_sequence_404(self, client):
        c, _ = client
        resp = c.post("/label", json={
            "sequence_id": "zz", "label": "Yes", "annotator_id": "a"
        })
        assert resp.status_code == 404

    def test_completion_state(self, client):
        c, _ = client
        for sid in ("s1", "s2", "s3"):
            c.post("/label", json={
                "sequence_id": sid, "label": "Neither", "annotator_id": "a"
            })
        body = c.get("/next").json()
        assert body["done"] is True
        assert body["remaining"] == 0

    def test_keyword_highlight_span(self, client):
        c, _ = client
        body = c.get("/sequences/s1").json()
        start, end = body["keyword_start"], body["keyword_end"]
        assert body["text"][start:end].lower() == "memory"


class TestPatternEndpoints:
    def test_create_pattern_reports_propagation(self, client):
        c, _ = client
        resp = c.post("/patterns", json={
            "regex": "grossly intact", "label": "No", "author": "alice"
        })
        assert resp.status_code == 200
        assert resp.json()["propagated"] == 1

    def test_preview_before_create(self, client):
        c, _ = client
        resp = c.post("/patterns/preview", json={"regex": "memory", "limit": 2})
        body = resp.json()
        assert body["match_count"] == 3
        assert len(body["examples"]) == 2

    def test_invalid_regex_422(self, client):
        c, _ = client
        assert c.post("/patterns/preview",
                      json={"regex": "mem("}).status_code == 422
        assert c.post("/patterns", json={
            "regex": "mem(", "label": "No", "author": "a"
        }).status_code == 422

    def test_retire_pattern(self, client):
        c, _ = client
        pid = c.post("/patterns", json={
            "regex": "memory", "label": "Neither", "author": "a"
        }).json()["pattern_id"]
        resp = c.delete(f"/patterns/{pid}")
        assert resp.json()["reverted"] == 3
        assert c.delete(f"/patterns/{pid}").status_code == 404

    def test_list_patterns_with_counts(self, client):
        c, _ = client
        c.post("/patterns", json={
            "regex": "loss", "label": "Yes", "author": "a"
        })
        listed = c.get("/patterns").json()
        assert len(listed) == 1
        assert listed[0]["match_count"] == 1

    def test_conflicting_regex_label_422(self, client):
        c, _ = client
        c.post("/patterns", json={"regex": "loss", "label": "Yes", "author": "a"})
        resp = c.post("/patterns",
                      json={"regex": "loss", "label": "No", "author": "a"})
        assert resp.status_code == 422


class TestProgressAndPersistence:
    def test_progress_stats(self, client):
        c, _ = client
        c.post("/label", json={
            "sequence_id": "s1", "label": "Yes", "annotator_id": "a"
        })
        stats = c.get("/progress").json()
        assert stats["annotated"] == 1
        assert stats["by_class"]["Yes"]["manual"] == 1

    def test_events_persisted_and_replayable(self, tmp_path):
        seqs = [_seq("s1", "memory intact"), _seq("s2", "memory loss")]
        store = AnnotationStore(seqs)
        app = create_app(store, events_path=tmp_path / "ev.jsonl")
        c = TestClient(app)
        c.post("/label", json={
            "sequence_id": "s1", "label": "No", "annotator_id": "a"
        })
        c.post("/patterns", json={"regex": "loss", "label": "Yes", "author": "b"})
        replayed = AnnotationStore.replay(seqs, tmp_path / "ev.jsonl")
        assert replayed.annotations == store.annotations

    def test_entropy_ordering_when_probabilities_loaded(self, tmp_path):
        seqs = [_seq("s1", "a"), _seq("s2", "b")]
        store = AnnotationStore(seqs)
        probs = {"s1": (0.9, 0.05, 0.05), "s2": (1 / 3, 1 / 3, 1 / 3)}
        app = create_app(store, events_path=tmp_path / "ev.jsonl",
                         probabilities=probs)
        c = TestClient(app)
        assert c.get("/next").json()["sequence"]["sequence_id"] == "s2"
