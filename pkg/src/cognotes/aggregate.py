"""Patient-level rollup of sequence predictions and the Med/ICD comparison
stratified by APOE allele."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Apoe, PatientRecord

YES = "Yes"
NO_NTR = "No/Ntr"


@dataclass(frozen=True)
class SequencePrediction:
    sequence_id: str
    patient_id: str
    probs: tuple[float, float, float]  # (Yes, No, Neither)

    @property
    def predicted_yes(self) -> bool:
        return self.probs[0] >= max(self.probs[1], self.probs[2])

    def as_dict(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "patient_id": self.patient_id,
            "probs": list(self.probs),
        }


@dataclass(frozen=True)
class PatientAssignment:
    patient_id: str
    positive_sequence_count: int
    total_sequence_count: int
    assigned: str  # YES or NO_NTR

    def as_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "positive_sequence_count": self.positive_sequence_count,
            "total_sequence_count": self.total_sequence_count,
            "assigned": self.assigned,
        }


def aggregate_patients(
    predictions: list[SequencePrediction],
    threshold: int = 2,
    patient_ids: list[str] | None = None,
    strict_greater: bool = False,
) -> list[PatientAssignment]:
    """Assign Yes to patients whose count of positively predicted sequences
    reaches the threshold; zero-sequence patients get No/Ntr."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    pos: dict[str, int] = {}
    tot: dict[str, int] = {}
    for pred in predictions:
        tot[pred.patient_id] = tot.get(pred.patient_id, 0) + 1
        if pred.predicted_yes:
            pos[pred.patient_id] = pos.get(pred.patient_id, 0) + 1
    all_patients = set(tot)
    if patient_ids is not None:
        all_patients |= set(patient_ids)
    out = []
    for pid in sorted(all_patients):
        p = pos.get(pid, 0)
        hit = p > threshold if strict_greater else p >= threshold
        out.append(
            PatientAssignment(
                patient_id=pid,
                positive_sequence_count=p,
                total_sequence_count=tot.get(pid, 0),
                assigned=YES if hit else NO_NTR,
            )
        )
    return out


@dataclass
class ThresholdTuning:
    best_threshold: int
    table: list[dict]  # per t: score and per-allele fractions
    warnings: list[str] = field(default_factory=list)


def tune_threshold(
    predictions: list[SequencePrediction],
    patients: dict[str, PatientRecord],
    t_range: range = range(1, 11),
    strict_greater: bool = False,
) -> ThresholdTuning:
    """Pick the sequence-count threshold whose per-allele predicted-Yes
    fractions best match the Med/ICD fractions (L1 distance, ties to the
    smaller threshold)."""
    warnings = []
    strata: dict[Apoe, list[str]] = {}
    for pid, rec in patients.items():
        strata.setdefault(rec.apoe, []).append(pid)
    usable = {}
    for allele in (Apoe.E2, Apoe.E3, Apoe.E4):
        members = strata.get(allele, [])
        if not members:
            warnings.append(f"allele stratum {allele.value} empty; excluded")
            continue
        usable[allele] = members
    if not usable:
        raise ValueError("no usable APOE strata")

    med_icd = {
        allele: sum(patients[p].med_icd_flag for p in members) / len(members)
        for allele, members in usable.items()
    }

    table = []
    best_t, best_score = None, None
    for t in t_range:
        assignments = aggregate_patients(
            predictions, t, patient_ids=list(patients), strict_greater=strict_greater
        )
        assigned = {a.patient_id: a.assigned for a in assignments}
        fractions = {
            allele: sum(assigned.get(p) == YES for p in members) / len(members)
            for allele, members in usable.items()
        }
        score = sum(abs(fractions[a] - med_icd[a]) for a in usable)
        table.append(
            {
                "threshold": t,
                "score": score,
                "predicted_yes": {a.value: fractions[a] for a in usable},
                "med_icd": {a.value: med_icd[a] for a in usable},
            }
        )
        if best_score is None or score < best_score:
            best_t, best_score = t, score
    return ThresholdTuning(best_threshold=best_t, table=table, warnings=warnings)


@dataclass
class ComparisonReport:
    rows: list[dict]  # per allele: count, yes_pct, no_ntr_pct, med_icd_pct
    discoveries: list[str]  # Yes-assigned patients without the Med/ICD flag

    def as_dict(self) -> dict:
        return {"rows": self.rows, "discoveries": self.discoveries}

    def format(self) -> str:
        lines = [
            f"{'APOE':<8} {'Count':>6} {'Yes %':>7} {'No/Ntr %':>9} {'M/I %':>7}"
        ]
        for row in self.rows:
            lines.append(
                f"{row['apoe']:<8} {row['count']:>6} {row['yes_pct']:>7.2f} "
                f"{row['no_ntr_pct']:>9.2f} {row['med_icd_pct']:>7.2f}"
            )
        lines.append(f"Discovered without Med/ICD flag: {len(self.discoveries)}")
        return "\n".join(lines)


def compare_to_codes(
    assignments: list[PatientAssignment], patients: dict[str, PatientRecord]
) -> ComparisonReport:
    """Per-allele comparison of predicted CI prevalence against the Med/ICD
    indicator, plus the list of newly discovered patients."""
    assigned = {a.patient_id: a for a in assignments}
    rows = []
    for allele in (Apoe.E2, Apoe.E3, Apoe.E4, Apoe.UNKNOWN):
        members = [p for p, rec in patients.items() if rec.apoe == allele]
        if not members:
            continue
        yes = sum(
            1 for p in members if assigned.get(p) and assigned[p].assigned == YES
        )
        flags = sum(patients[p].med_icd_flag for p in members)
        rows.append(
            {
                "apoe": allele.value,
                "count": len(members),
                "yes_pct": yes / len(members),
                "no_ntr_pct": (len(members) - yes) / len(members),
                "med_icd_pct": flags / len(members),
            }
        )
    discoveries = sorted(
        a.patient_id
        for a in assignments
        if a.assigned == YES
        and a.patient_id in patients
        and not patients[a.patient_id].med_icd_flag
    )
    return ComparisonReport(rows=rows, discoveries=discoveries)


def write_assignments(assignments: list[PatientAssignment], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for a in assignments:
            f.write(json.dumps(a.as_dict(), sort_keys=True) + "\n")


def read_predictions(path: str | Path) -> list[SequencePrediction]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                out.append(
                    SequencePrediction(
                        rec["sequence_id"], rec["patient_id"], tuple(rec["probs"])
                    )
                )
    return out


def write_predictions(predictions: list[SequencePrediction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in predictions:
            f.write(json.dumps(p.as_dict(), sort_keys=True) + "\n")
