"""Core corpus types, file ingestion, and the dementia keyword lexicon."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    OTHER = "other"


class Apoe(str, Enum):
    E2 = "e2"
    E3 = "e3"
    E4 = "e4"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    age_years: float
    gender: Gender
    apoe: Apoe
    med_icd_flag: bool

    def as_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "age_years": self.age_years,
            "gender": self.gender.value,
            "apoe": self.apoe.value,
            "med_icd_flag": self.med_icd_flag,
        }


@dataclass(frozen=True)
class Note:
    note_id: str
    patient_id: str
    timestamp: str
    text: str

    def as_dict(self) -> dict:
        return {
            "note_id": self.note_id,
            "patient_id": self.patient_id,
            "timestamp": self.timestamp,
            "text": self.text,
        }


@dataclass(frozen=True)
class LexiconEntry:
    keyword: str
    case_sensitive: bool = False

    def pattern(self) -> re.Pattern:
        # multi-word keywords tolerate any single run of whitespace between words
        body = r"\s+".join(re.escape(part) for part in self.keyword.split())
        flags = 0 if self.case_sensitive else re.IGNORECASE
        return re.compile(r"\b" + body + r"\b", flags)


@dataclass
class Lexicon:
    entries: list[LexiconEntry]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            key = e.keyword if e.case_sensitive else e.keyword.casefold()
            if key in seen:
                raise ValueError(f"duplicate lexicon keyword: {e.keyword!r}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


# Short all-caps test/diagnosis acronyms would match inside ordinary words
# ("ad", "mci") if folded, so they stay case sensitive.
_CASE_SENSITIVE_ACRONYMS = {"MOCA", "MCI", "AD", "MMSE", "LBD"}

_DEFAULT_KEYWORDS = [
    "Memory",
    "Cognition",
    "Dementia",
    "Cerebral",
    "Cerebrovascular",
    "Cerebellar",
    "Cognitive Impairment",
    "Alzheimer",
    "MOCA",
    "Neurocognitive",
    "MCI",
    "Amnesia",
    "AD",
    "Lewy",
    "MMSE",
    "LBD",
    "Corticobasal",
    "Picks",
]


def default_lexicon() -> Lexicon:
    """The 18-keyword cognitive-impairment lexicon."""
    return Lexicon(
        [
            LexiconEntry(kw, case_sensitive=kw in _CASE_SENSITIVE_ACRONYMS)
            for kw in _DEFAULT_KEYWORDS
        ]
    )


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon override: one keyword per line, optional `\\tcs` flag."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        keyword = parts[0].strip()
        flags = {p.strip() for p in parts[1:]}
        entries.append(LexiconEntry(keyword, case_sensitive="cs" in flags))
    return Lexicon(entries)


@dataclass
class IngestError:
    path: str
    line_number: int
    message: str


@dataclass
class Corpus:
    """Immutable after ingestion; safe for concurrent reads."""

    patients: dict[str, PatientRecord] = field(default_factory=dict)
    notes: dict[str, Note] = field(default_factory=dict)
    errors: list[IngestError] = field(default_factory=list)

    def notes_sorted(self) -> list[Note]:
        return [self.notes[k] for k in sorted(self.notes)]


def _parse_patient(rec: dict) -> PatientRecord:
    age = float(rec["age_years"])
    if age < 0:
        raise ValueError("age_years must be non-negative")
    return PatientRecord(
        patient_id=str(rec["patient_id"]),
        age_years=age,
        gender=Gender(rec["gender"]),
        apoe=Apoe(rec["apoe"]),
        med_icd_flag=bool(rec["med_icd_flag"]),
    )


def _parse_note(rec: dict) -> Note:
    text = str(rec["text"])
    if not text.strip():
        raise ValueError("note text empty after trim")
    return Note(
        note_id=str(rec["note_id"]),
        patient_id=str(rec["patient_id"]),
        timestamp=str(rec["timestamp"]),
        text=text,
    )


def ingest_corpus(patients_path: str | Path, notes_path: str | Path) -> Corpus:
    """Load patients and notes from line-delimited JSON files.

    Malformed lines are recorded as errors and skipped; a duplicate
    patient_id is a hard error.
    """
    corpus = Corpus()
    for line_number, line in _iter_lines(patients_path):
        try:
            rec = _parse_patient(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            corpus.errors.append(IngestError(str(patients_path), line_number, str(exc)))
            continue
        if rec.patient_id in corpus.patients:
            raise ValueError(
                f"duplicate patient_id {rec.patient_id!r} "
                f"at {patients_path}:{line_number}"
            )
        corpus.patients[rec.patient_id] = rec

    for line_number, line in _iter_lines(notes_path):
        try:
            note = _parse_note(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            corpus.errors.append(IngestError(str(notes_path), line_number, str(exc)))
            continue
        if note.patient_id not in corpus.patients:
            corpus.errors.append(
                IngestError(
                    str(notes_path), line_number,
                    f"note {note.note_id!r} references unknown patient "
                    f"{note.patient_id!r}",
                )
            )
            continue
        if note.note_id in corpus.notes:
            corpus.errors.append(
                IngestError(str(notes_path), line_number,
                            f"duplicate note_id {note.note_id!r}")
            )
            continue
        corpus.notes[note.note_id] = note
    return corpus


def write_corpus(corpus: Corpus, patients_path: str | Path, notes_path: str | Path) -> None:
    with open(patients_path, "w", encoding="utf-8") as f:
        for pid in sorted(corpus.patients):
            f.write(json.dumps(corpus.patients[pid].as_dict(), sort_keys=True) + "\n")
    with open(notes_path, "w", encoding="utf-8") as f:
        for nid in sorted(corpus.notes):
            f.write(json.dumps(corpus.notes[nid].as_dict(), sort_keys=True) + "\n")


def _iter_lines(path: str | Path):
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            if line.strip():
                yield i, line
