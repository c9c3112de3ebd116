"""Wire-protocol scorer process.

Reads line-delimited JSON requests ({"id", "text"}, batch terminated by a
blank line) from stdin and answers with one {"id", "probs"} or
{"id", "error"} object per line plus a blank line. Malformed request lines
produce per-item errors; the process stays alive until EOF.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import torch

from .data import Vocab
from .encoder import SequenceEncoder


class Scorer:
    def __init__(self, model_dir: str | Path):
        model_dir = Path(model_dir)
        if not model_dir.is_dir():
            raise FileNotFoundError(f"model dir not found: {model_dir}")
        with open(model_dir / "config.json", encoding="utf-8") as f:
            self.config = json.load(f)
        self.vocab = Vocab.load(model_dir / "vocab.json")
        self.model = SequenceEncoder(
            self.config["vocab_size"],
            dim=self.config["dim"],
            depth=self.config["depth"],
            max_len=self.config["max_len"],
        )
        self.model.load_state_dict(
            torch.load(model_dir / "model.pt", weights_only=True)
        )
        self.model.eval()

    def score(self, texts: list[str], batch_size: int = 256) -> list[list[float]]:
        max_len = self.config["max_len"]
        ids = torch.tensor([self.vocab.encode(t, max_len) for t in texts])
        out = []
        with torch.no_grad():
            for start in range(0, len(ids), batch_size):
                logits = self.model(ids[start:start + batch_size])
                out.extend(torch.softmax(logits, dim=1).tolist())
        return out


def _respond_batch(scorer: Scorer, lines: list[str], out) -> None:
    parsed = []  # (id or None, text or error message)
    for line in lines:
        try:
            rec = json.loads(line)
            rid, text = rec["id"], rec["text"]
            if not isinstance(rid, str) or not isinstance(text, str):
                raise TypeError("id and text must be strings")
            parsed.append((rid, text, None))
        except Exception as exc:
            rid = None
            try:
                rid = json.loads(line).get("id")
            except Exception:
                pass
            parsed.append((rid if isinstance(rid, str) else "",
                           None, f"malformed request line: {exc}"))
    texts = [t for _, t, err in parsed if err is None]
    probs = iter(scorer.score(texts) if texts else [])
    for rid, _, err in parsed:
        if err is None:
            out.write(json.dumps({"id": rid, "probs": next(probs)}) + "\n")
        else:
            out.write(json.dumps({"id": rid, "error": err}) + "\n")
    out.write("\n")
    out.flush()


def serve(model_dir: str | Path, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    scorer = Scorer(model_dir)
    batch: list[str] = []
    for line in stdin:
        if line.strip():
            batch.append(line)
        else:
            _respond_batch(scorer, batch, stdout)
            batch = []
    if batch:
        _respond_batch(scorer, batch, stdout)
