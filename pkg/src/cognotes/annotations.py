"""Three-class annotation store: event log, always-pattern propagation,
stratified patient-disjoint splitting, and uncertainty ranking."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .extract import Sequence

LABELS = ("Yes", "No", "Neither")

MANUAL = "manual"
ALWAYS_PATTERN = "always_pattern"


def _check_label(label: str) -> str:
    if label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}, got {label!r}")
    return label


@dataclass(frozen=True)
class Annotation:
    sequence_id: str
    label: str
    provenance_kind: str  # MANUAL or ALWAYS_PATTERN
    provenance_id: str  # annotator_id or pattern_id
    created_at: int  # event index in the store log


@dataclass
class AlwaysPattern:
    pattern_id: str
    regex: str
    label: str
    author: str
    created_at: int
    retired: bool = False


class AnnotationStore:
    """Single-writer, multi-reader store over a fixed sequence set.

    Every mutation is appended to an event log so that pattern retirement
    restores the exact prior state and history stays auditable.
    """

    def __init__(self, sequences: list[Sequence]):
        self.sequences: dict[str, Sequence] = {s.sequence_id: s for s in sequences}
        self.events: list[dict] = []
        self.annotations: dict[str, Annotation] = {}
        self.patterns: dict[str, AlwaysPattern] = {}
        self._next_pattern = 0

    # -- mutations -----------------------------------------------------

    def annotate(
        self, sequence_id: str, label: str, annotator_id: str, overwrite: bool = False
    ) -> Annotation:
        _check_label(label)
        if sequence_id not in self.sequences:
            raise KeyError(f"unknown sequence {sequence_id!r}")
        existing = self.annotations.get(sequence_id)
        if existing is not None and existing.provenance_kind == MANUAL and not overwrite:
            raise ValueError(
                f"sequence {sequence_id!r} already has a manual annotation; "
                "pass overwrite=True to replace it"
            )
        event = {
            "event": "annotate",
            "sequence_id": sequence_id,
            "label": label,
            "annotator_id": annotator_id,
            "overwrite": overwrite,
        }
        return self._apply(event)

    def add_always_pattern(
        self, regex: str, label: str, author: str
    ) -> tuple[AlwaysPattern, int]:
        _check_label(label)
        try:
            re.compile(regex)
        except re.error as exc:
            raise ValueError(f"invalid regex at position {exc.pos}: {exc.msg}") from exc
        for pat in self.patterns.values():
            if not pat.retired and pat.regex == regex and pat.label != label:
                raise ValueError(
                    f"pattern {regex!r} already active with label {pat.label!r}; "
                    "retire it first"
                )
        event = {"event": "add_pattern", "regex": regex, "label": label,
                 "author": author}
        return self._apply(event)

    def retire_pattern(self, pattern_id: str) -> int:
        pat = self.patterns.get(pattern_id)
        if pat is None or pat.retired:
            raise KeyError(f"no active pattern {pattern_id!r}")
        return self._apply({"event": "retire_pattern", "pattern_id": pattern_id})

    def _apply(self, event: dict):
        """Apply one event to the current view and append it to the log."""
        created_at = len(self.events)
        kind = event["event"]
        if kind == "annotate":
            ann = Annotation(
                sequence_id=event["sequence_id"],
                label=event["label"],
                provenance_kind=MANUAL,
                provenance_id=event["annotator_id"],
                created_at=created_at,
            )
            self.annotations[ann.sequence_id] = ann
            self.events.append(event)
            return ann
        if kind == "add_pattern":
            pattern_id = f"ap{self._next_pattern:04d}"
            self._next_pattern += 1
            pat = AlwaysPattern(
                pattern_id=pattern_id,
                regex=event["regex"],
                label=event["label"],
                author=event["author"],
                created_at=created_at,
            )
            self.patterns[pattern_id] = pat
            count = self._propagate(pat)
            self.events.append({**event, "pattern_id": pattern_id})
            return pat, count
        if kind == "retire_pattern":
            pattern_id = event["pattern_id"]
            pat = self.patterns[pattern_id]
            pat.retired = True
            reverted = [
                sid
                for sid, ann in self.annotations.items()
                if ann.provenance_kind == ALWAYS_PATTERN
                and ann.provenance_id == pattern_id
            ]
            for sid in reverted:
                del self.annotations[sid]
            self.events.append(event)
            return len(reverted)
        raise ValueError(f"unknown event kind {kind!r}")

    def _propagate(self, pattern: AlwaysPattern) -> int:
        compiled = re.compile(pattern.regex)
        count = 0
        for sid in sorted(self.sequences):
            if sid in self.annotations:
                continue  # manual precedence and first-pattern-wins
            if compiled.search(self.sequences[sid].text):
                self.annotations[sid] = Annotation(
                    sequence_id=sid,
                    label=pattern.label,
                    provenance_kind=ALWAYS_PATTERN,
                    provenance_id=pattern.pattern_id,
                    created_at=pattern.created_at,
                )
                count += 1
        return count

    def repropagate(self) -> int:
        """Re-apply all active patterns to still-unlabeled sequences."""
        total = 0
        for pid in sorted(self.patterns):
            pat = self.patterns[pid]
            if not pat.retired:
                total += self._propagate(pat)
        return total

    # -- queries ---------------------------------------------------------

    def unlabeled_ids(self) -> list[str]:
        return sorted(set(self.sequences) - set(self.annotations))

    def pattern_match_count(self, pattern_id: str) -> int:
        return sum(
            1
            for ann in self.annotations.values()
            if ann.provenance_kind == ALWAYS_PATTERN and ann.provenance_id == pattern_id
        )

    def progress_stats(self) -> dict:
        counts = {label: {MANUAL: 0, ALWAYS_PATTERN: 0} for label in LABELS}
        for ann in self.annotations.values():
            counts[ann.label][ann.provenance_kind] += 1
        return {
            "total_sequences": len(self.sequences),
            "annotated": len(self.annotations),
            "unlabeled": len(self.sequences) - len(self.annotations),
            "by_class": counts,
        }

    # -- persistence -------------------------------------------------------

    def save_events(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for event in self.events:
                f.write(json.dumps(event, sort_keys=True) + "\n")

    @classmethod
    def replay(cls, sequences: list[Sequence], path: str | Path) -> "AnnotationStore":
        store = cls(sequences)
        with open(path, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["event"] == "add_pattern":
                    # ids are re-derived sequentially during replay
                    event.pop("pattern_id", None)
                store._apply(event)
        return store


# -- stratified patient-disjoint split ----------------------------------


@dataclass
class SplitResult:
    train_ids: list[str]
    test_ids: list[str]
    warnings: list[str] = field(default_factory=list)


def stratified_split(
    store: AnnotationStore, train_fraction: float = 0.9, seed: int = 0
) -> SplitResult:
    """Split annotated sequences so each (label x provenance) cell lands
    within one item of the train fraction while keeping every patient's
    sequences on a single side.
    """
    import random

    annotated = sorted(store.annotations)
    if not annotated:
        return SplitResult([], [])
    cells = {}  # (label, kind) -> total
    patient_vec: dict[str, dict] = {}  # patient -> cell -> count
    patient_seqs: dict[str, list[str]] = {}
    for sid in annotated:
        ann = store.annotations[sid]
        seq = store.sequences[sid]
        cell = (ann.label, ann.provenance_kind)
        cells[cell] = cells.get(cell, 0) + 1
        patient_vec.setdefault(seq.patient_id, {})
        patient_vec[seq.patient_id][cell] = patient_vec[seq.patient_id].get(cell, 0) + 1
        patient_seqs.setdefault(seq.patient_id, []).append(sid)

    warnings = []
    small_cells = {c for c, n in cells.items() if n < 2}
    for cell in sorted(small_cells):
        warnings.append(f"cell {cell} has fewer than 2 items; assigned to train")
    # patients touching a singleton cell are pinned to train
    pinned = {
        p for p, vec in patient_vec.items() if any(c in small_cells for c in vec)
    }
    balanced_cells = sorted(set(cells) - small_cells)
    targets = {c: train_fraction * cells[c] for c in balanced_cells}

    rng = random.Random(seed)
    patients = sorted(patient_vec)
    rng.shuffle(patients)
    free = [p for p in patients if p not in pinned]

    train_side = {p: True for p in pinned}
    counts = {c: 0.0 for c in balanced_cells}
    assigned = {c: 0.0 for c in balanced_cells}
    for p in pinned:
        for c, v in patient_vec[p].items():
            if c in counts:
                counts[c] += v
                assigned[c] += v

    def _dev(cnts, totals):
        return sum(abs(cnts[c] - train_fraction * totals[c]) for c in balanced_cells
                   if totals[c] > 0)

    for p in free:
        vec = patient_vec[p]
        new_assigned = dict(assigned)
        for c, v in vec.items():
            if c in new_assigned:
                new_assigned[c] += v
        as_train = dict(counts)
        for c, v in vec.items():
            if c in as_train:
                as_train[c] += v
        if _dev(as_train, new_assigned) <= _dev(counts, new_assigned):
            train_side[p] = True
            counts = as_train
        else:
            train_side[p] = False
        assigned = new_assigned

    # local search: flip single patients while it reduces cell violations
    def _objective(cnts):
        viol = 0.0
        dev = 0.0
        for c in balanced_cells:
            d = abs(cnts[c] - targets[c])
            viol += max(0.0, d - 1.0)
            dev += d
        return (viol, dev)

    def _flip_counts(cnts, p):
        out = dict(cnts)
        sign = -1 if train_side[p] else 1
        for c, v in patient_vec[p].items():
            if c in out:
                out[c] += sign * v
        return out

    improved = True
    passes = 0
    while improved and passes < 50:
        improved = False
        passes += 1
        for p in sorted(free):
            candidate = _flip_counts(counts, p)
            if _objective(candidate) < _objective(counts):
                counts = candidate
                train_side[p] = not train_side[p]
                improved = True
        if improved:
            continue
        # single flips stalled: try swapping one patient from each side.
        # Patients with identical cell vectors are interchangeable, so one
        # representative per (vector, side) keeps the pair search small.
        reps = {}
        for p in sorted(free):
            sig = tuple(sorted(
                (c, v) for c, v in patient_vec[p].items() if c in targets
            ))
            reps.setdefault((sig, train_side[p]), p)
        rep_list = sorted(reps.values())
        for a in rep_list:
            for b in rep_list:
                if train_side[a] == train_side[b]:
                    continue
                candidate = _flip_counts(_flip_counts(counts, a), b)
                if _objective(candidate) < _objective(counts):
                    counts = candidate
                    train_side[a] = not train_side[a]
                    train_side[b] = not train_side[b]
                    improved = True
                    break
            if improved:
                break

    train_ids, test_ids = [], []
    for p in sorted(patient_vec):
        (train_ids if train_side.get(p, True) else test_ids).extend(
            sorted(patient_seqs[p])
        )
    return SplitResult(sorted(train_ids), sorted(test_ids), warnings)


# -- uncertainty ranking --------------------------------------------------


def shannon_entropy(dist) -> float:
    return -sum(p * math.log(p) for p in dist if p > 0)


def rank_uncertain(
    store: AnnotationStore, probabilities: dict[str, tuple]
) -> list[str]:
    """Unlabeled sequences ordered by descending class-distribution entropy,
    ties broken by sequence id."""
    for sid, dist in probabilities.items():
        if abs(sum(dist) - 1.0) > 1e-6:
            raise ValueError(f"distribution for {sid!r} does not sum to 1")
    unlabeled = [sid for sid in store.unlabeled_ids() if sid in probabilities]
    return sorted(unlabeled, key=lambda sid: (-shannon_entropy(probabilities[sid]), sid))
