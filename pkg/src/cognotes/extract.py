"""Keyword scanning and fixed-width sequence window construction."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, Lexicon

DEFAULT_WINDOW = 800


@dataclass(frozen=True)
class Sequence:
    sequence_id: str
    patient_id: str
    note_id: str
    keyword: str
    match_offset: int
    window_start: int
    window_end: int
    text: str

    def as_dict(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "patient_id": self.patient_id,
            "note_id": self.note_id,
            "keyword": self.keyword,
            "match_offset": self.match_offset,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "text": self.text,
        }


def extract_sequences(
    corpus: Corpus, lexicon: Lexicon, window: int = DEFAULT_WINDOW
) -> list[Sequence]:
    """One window per keyword match, centered on the match and clipped at
    note boundaries. Output is canonicalized by (note_id, offset, keyword).
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    compiled = [(entry.keyword, entry.pattern()) for entry in lexicon]
    sequences = []
    for note in corpus.notes_sorted():
        length = len(note.text)
        matches = []
        for keyword, pattern in compiled:
            for m in pattern.finditer(note.text):
                matches.append((m.start(), keyword, m.end() - m.start()))
        matches.sort()
        for offset, keyword, matchlen in matches:
            start = max(0, offset + matchlen // 2 - window // 2)
            start = min(start, offset)  # tiny windows still cover the match
            end = min(length, start + window)
            sequences.append(
                Sequence(
                    sequence_id=f"{note.note_id}:{offset}:{keyword}",
                    patient_id=note.patient_id,
                    note_id=note.note_id,
                    keyword=keyword,
                    match_offset=offset,
                    window_start=start,
                    window_end=end,
                    text=note.text[start:end],
                )
            )
    return sequences


def dedupe_overlapping(sequences: list[Sequence]) -> list[Sequence]:
    """Collapse sequences with identical windows within a note, keeping the
    first; distinct windows are kept even when they overlap."""
    seen = set()
    out = []
    for seq in sequences:
        key = (seq.note_id, seq.window_start, seq.window_end)
        if key in seen:
            continue
        seen.add(key)
        out.append(seq)
    return out


def extraction_report(sequences: list[Sequence]) -> list[tuple[str, int]]:
    """Per-keyword match counts, sorted by count descending then keyword."""
    counts = Counter(seq.keyword for seq in sequences)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def write_sequences(sequences: list[Sequence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for seq in sequences:
            f.write(json.dumps(seq.as_dict(), sort_keys=True) + "\n")


def read_sequences(path: str | Path) -> list[Sequence]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(Sequence(**json.loads(line)))
    return out
