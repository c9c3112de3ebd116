"""Export reading, tokenization and vocabulary for the plugin."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

LABELS = ("Yes", "No", "Neither")
PAD, UNK = 0, 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def read_export(path: str | Path) -> list[dict]:
    """Rows of {sequence_id, patient_id, text, label} as written by the
    pipeline's train stage."""
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            for key in ("sequence_id", "text", "label"):
                if key not in rec:
                    raise ValueError(f"line {lineno}: missing field {key!r}")
            if rec["label"] not in LABELS:
                raise ValueError(f"line {lineno}: unknown label {rec['label']!r}")
            rows.append(rec)
    if not rows:
        raise ValueError(f"empty export: {path}")
    return rows


@dataclass
class Vocab:
    index: dict[str, int]

    @classmethod
    def from_texts(cls, texts: list[str]) -> "Vocab":
        tokens = sorted({t for text in texts for t in tokenize(text)})
        return cls({tok: i + 2 for i, tok in enumerate(tokens)})

    def __len__(self) -> int:
        return len(self.index) + 2

    def encode(self, text: str, max_len: int) -> list[int]:
        ids = [self.index.get(t, UNK) for t in tokenize(text)][:max_len]
        return ids + [PAD] * (max_len - len(ids))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.index, f, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))
