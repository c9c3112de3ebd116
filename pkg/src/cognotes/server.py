"""HTTP annotation service consumed by the browser UI."""
from __future__ import annotations

import json
import re
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .annotations import LABELS, AnnotationStore, rank_uncertain
from .extract import Sequence


class LabelRequest(BaseModel):
    sequence_id: str
    label: str
    annotator_id: str
    overwrite: bool = False


class PatternRequest(BaseModel):
    regex: str
    label: str
    author: str


class PreviewRequest(BaseModel):
    regex: str
    limit: int = 10


def _sequence_payload(seq: Sequence) -> dict:
    d = seq.as_dict()
    # highlight span of the keyword match relative to the window text
    d["keyword_start"] = seq.match_offset - seq.window_start
    d["keyword_end"] = min(
        d["keyword_start"] + len(seq.keyword), len(seq.text)
    )
    return d


def create_app(
    store: AnnotationStore,
    events_path: str | Path | None = None,
    probabilities: dict[str, tuple] | None = None,
) -> FastAPI:
    """Single-writer service: mutations serialize through a lock and are
    appended to the event log when a path is given."""
    app = FastAPI(title="cognotes annotation service")
    lock = threading.Lock()
    ranked = (
        rank_uncertain(store, probabilities) if probabilities else None
    )

    def _persist_last_event():
        if events_path is not None:
            with open(events_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(store.events[-1], sort_keys=True) + "\n")

    @app.get("/next")
    def fetch_next():
        with lock:
            unlabeled = store.unlabeled_ids()
            if not unlabeled:
                return {"done": True, "sequence": None, "remaining": 0}
            if ranked:
                candidates = [sid for sid in ranked if sid not in store.annotations]
                sid = candidates[0] if candidates else unlabeled[0]
            else:
                sid = unlabeled[0]
            return {
                "done": False,
                "sequence": _sequence_payload(store.sequences[sid]),
                "remaining": len(unlabeled),
            }

    @app.get("/sequences/{sequence_id}")
    def get_sequence(sequence_id: str):
        seq = store.sequences.get(sequence_id)
        if seq is None:
            raise HTTPException(404, f"unknown sequence {sequence_id!r}")
        return _sequence_payload(seq)

    @app.post("/label")
    def submit_label(req: LabelRequest):
        with lock:
            try:
                ann = store.annotate(
                    req.sequence_id, req.label, req.annotator_id, req.overwrite
                )
            except KeyError as exc:
                raise HTTPException(404, str(exc))
            except ValueError as exc:
                status = 409 if "already has a manual annotation" in str(exc) else 422
                raise HTTPException(status, str(exc))
            _persist_last_event()
            return {
                "sequence_id": ann.sequence_id,
                "label": ann.label,
                "provenance_kind": ann.provenance_kind,
            }

    @app.post("/patterns")
    def create_pattern(req: PatternRequest):
        with lock:
            try:
                pattern, count = store.add_always_pattern(
                    req.regex, req.label, req.author
                )
            except ValueError as exc:
                raise HTTPException(422, str(exc))
            _persist_last_event()
            return {"pattern_id": pattern.pattern_id, "propagated": count}

    @app.post("/patterns/preview")
    def preview_pattern(req: PreviewRequest):
        try:
            compiled = re.compile(req.regex)
        except re.error as exc:
            raise HTTPException(422, f"invalid regex at position {exc.pos}: {exc.msg}")
        with lock:
            matches = []
            for sid in store.unlabeled_ids():
                if compiled.search(store.sequences[sid].text):
                    matches.append(sid)
            return {
                "match_count": len(matches),
                "examples": [
                    _sequence_payload(store.sequences[sid])
                    for sid in matches[: req.limit]
                ],
            }

    @app.get("/patterns")
    def list_patterns():
        with lock:
            return [
                {
                    "pattern_id": pat.pattern_id,
                    "regex": pat.regex,
                    "label": pat.label,
                    "author": pat.author,
                    "retired": pat.retired,
                    "match_count": store.pattern_match_count(pid),
                }
                for pid, pat in sorted(store.patterns.items())
            ]

    @app.delete("/patterns/{pattern_id}")
    def retire_pattern(pattern_id: str):
        with lock:
            try:
                reverted = store.retire_pattern(pattern_id)
            except KeyError as exc:
                raise HTTPException(404, str(exc))
            _persist_last_event()
            return {"pattern_id": pattern_id, "reverted": reverted}

    @app.get("/progress")
    def progress():
        with lock:
            return store.progress_stats()

    @app.get("/labels")
    def labels():
        return {"labels": list(LABELS)}

    return app
