"""Classifier-agnostic scoring boundary.

Wire protocol (normative; see PROTOCOL.md):
  request:  one JSON object per line, `{"id": str, "text": str}`,
            batch terminated by a single blank line
  response: one JSON object per line, `{"id": str, "probs": [yes, no, neither]}`
            or `{"id": str, "error": str}`, terminated by a blank line
The same framing runs over a child process's stdin/stdout or as the body
of an HTTP POST. Probabilities must sum to 1 within 1e-3.
"""
from __future__ import annotations

import json
import subprocess
import threading
import urllib.request
from dataclasses import dataclass

from .artifacts import load_model_artifact
from .extract import Sequence
from .model import predict_proba

PROB_TOL = 1e-3


@dataclass(frozen=True)
class ScoreResult:
    sequence_id: str
    probs: tuple[float, float, float] | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.probs is not None


def score_with_internal(artifact_path, sequences: list[Sequence]) -> list[ScoreResult]:
    """Score with the bundled TF-IDF + linear model; canonical
    (Yes, No, Neither) order, deterministic."""
    if not sequences:
        return []
    tfidf, linear, _ = load_model_artifact(artifact_path)
    X = tfidf.transform_selected([s.text for s in sequences])
    if X.shape[1] != linear.weights.shape[1]:
        raise ValueError("model artifact feature mismatch")
    probas = predict_proba(linear, X)
    return [
        ScoreResult(seq.sequence_id, tuple(float(p) for p in row))
        for seq, row in zip(sequences, probas)
    ]


def serialize_request(items: list[tuple[str, str]]) -> str:
    lines = [json.dumps({"id": i, "text": t}, sort_keys=True) for i, t in items]
    return "\n".join(lines) + "\n\n"


def parse_request(payload: str) -> list[tuple[str, str]]:
    items = []
    for line in payload.splitlines():
        if not line.strip():
            break
        rec = json.loads(line)
        items.append((str(rec["id"]), str(rec["text"])))
    return items


def serialize_response(results: list[ScoreResult]) -> str:
    lines = []
    for r in results:
        if r.ok:
            lines.append(
                json.dumps({"id": r.sequence_id, "probs": list(r.probs)},
                           sort_keys=True)
            )
        else:
            lines.append(
                json.dumps({"id": r.sequence_id, "error": r.error}, sort_keys=True)
            )
    return "\n".join(lines) + "\n\n"


def _parse_response_lines(lines: list[str]) -> dict[str, ScoreResult]:
    by_id: dict[str, ScoreResult] = {}
    for line in lines:
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            rid = str(rec["id"])
        except (ValueError, KeyError):
            continue  # unattributable line; missing ids error out later
        if rid in by_id:
            continue  # first response wins
        if "error" in rec:
            by_id[rid] = ScoreResult(rid, error=str(rec["error"]))
            continue
        probs = rec.get("probs")
        if (
            not isinstance(probs, list)
            or len(probs) != 3
            or abs(sum(probs) - 1.0) > PROB_TOL
        ):
            by_id[rid] = ScoreResult(rid, error="malformed probability vector")
            continue
        by_id[rid] = ScoreResult(rid, tuple(float(p) for p in probs))
    return by_id


def _pair_results(
    items: list[tuple[str, str]], by_id: dict[str, ScoreResult]
) -> list[ScoreResult]:
    return [
        by_id.get(rid, ScoreResult(rid, error="missing response"))
        for rid, _ in items
    ]


@dataclass
class ExternalEndpoint:
    command: list[str] | None = None  # stdio child process mode
    url: str | None = None  # local-socket HTTP mode
    timeout: float = 60.0


def score_with_external(
    endpoint: ExternalEndpoint, sequences: list[Sequence]
) -> list[ScoreResult]:
    """One in-flight batch over the wire protocol; per-item failures do not
    abort the batch. Output order matches input order."""
    items = [(s.sequence_id, s.text) for s in sequences]
    if not items:
        return []
    payload = serialize_request(items)
    if endpoint.command:
        raw = _run_stdio_batch(endpoint.command, payload, endpoint.timeout)
    elif endpoint.url:
        req = urllib.request.Request(
            endpoint.url,
            data=payload.encode("utf-8"),
            headers={"Content-Type": "application/x-ndjson"},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=endpoint.timeout) as resp:
            raw = resp.read().decode("utf-8")
    else:
        raise ValueError("endpoint needs a command or a url")
    by_id = _parse_response_lines(raw.splitlines())
    return _pair_results(items, by_id)


def _run_stdio_batch(command: list[str], payload: str, timeout: float) -> str:
    proc = subprocess.Popen(
        command,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    out: list[str] = []
    err: list[Exception] = []

    def _reader():
        try:
            assert proc.stdout is not None
            for line in proc.stdout:
                if line.strip() == "":
                    break
                out.append(line)
        except Exception as exc:  # surfaced as a batch error below
            err.append(exc)

    reader = threading.Thread(target=_reader, daemon=True)
    reader.start()
    try:
        assert proc.stdin is not None
        proc.stdin.write(payload)
        proc.stdin.flush()
        reader.join(timeout)
        if reader.is_alive():
            raise TimeoutError(f"external scorer timed out after {timeout}s")
        if err:
            raise RuntimeError(f"external scorer transport failure: {err[0]}")
    finally:
        try:
            proc.stdin.close()
        except OSError:
            pass
        proc.terminate()
        proc.wait(timeout=5)
    return "".join(out)
