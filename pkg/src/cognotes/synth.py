"""Synthetic clinical-note corpus generator for desk-scale experiments.

Real note text is private, so notes are built from templates that plant
Yes-evidence, No-evidence, and Neither filler around lexicon keywords,
plus third-party confounders ("Patient reports wife has ...") whose
bag-of-words is deliberately indistinguishable from a Yes template.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Apoe, Corpus, Gender, Note, PatientRecord, default_lexicon

YES_TEMPLATES = [
    "Patient reports worsening {kw} problems with marked decline in daily function.",
    "Exam notable for impaired {kw} with poor recall and progressive decline.",
    "{kw} testing shows significant deficits; patient is confused and forgetful.",
    "Assessment: {kw} related impairment, patient unable to manage medications independently.",
]

NO_TEMPLATES = [
    "{kw} screen within normal limits; patient fully oriented, recall intact.",
    "No concerns regarding {kw}; mental status grossly intact on exam today.",
    "Routine {kw} evaluation negative, attention and concentration preserved.",
    "{kw} testing unremarkable; judgement and insight intact, oriented x3.",
]

NEITHER_TEMPLATES = [
    "Patient scheduled for {kw} clinic intake next month; referral forms pending.",
    "Educational brochure on the {kw} research registry provided at checkout.",
    "Billing code updated for prior {kw} consult; no examination performed today.",
    "Front desk confirmed {kw} study recruitment flyer was mailed to the home address.",
]

# Paired so that each confounder shares its bag of words with a Yes
# template; only the agent order distinguishes them.
YES_PAIRED_TEMPLATES = [
    "Wife reports patient has severe {kw} loss and marked decline.",
    "Daughter notes patient is confused and forgetful with worsening {kw}.",
    "Son is caregiver for patient who has {kw} impairment.",
    "Husband states patient struggles with {kw} and needs help at home.",
]

CONFOUNDER_TEMPLATES = [
    "Patient reports wife has severe {kw} loss and marked decline.",
    "Patient notes daughter is confused and forgetful with worsening {kw}.",
    "Patient is caregiver for son who has {kw} impairment.",
    "Patient states husband struggles with {kw} and needs help at home.",
]

FILLER_SENTENCES = [
    "Vitals stable and reviewed.",
    "Medication list reconciled with pharmacy records.",
    "Patient ambulating without assistance.",
    "Follow up visit arranged in three months.",
    "Labs ordered and pending at this time.",
    "Diet and exercise counseling provided.",
    "No acute distress observed during the visit.",
    "Immunizations are up to date.",
]

LABEL_YES = "Yes"
LABEL_NO = "No"
LABEL_NEITHER = "Neither"


@dataclass
class SynthConfig:
    n_patients: int
    ci_fraction: float = 0.2
    confounder_rate: float = 0.15
    min_notes: int = 1
    max_notes: int = 3


@dataclass
class NoteGold:
    label: str
    confounder: bool

    def as_dict(self) -> dict:
        return {"label": self.label, "confounder": self.confounder}


@dataclass
class SynthResult:
    corpus: Corpus
    note_gold: dict[str, NoteGold] = field(default_factory=dict)
    patient_gold: dict[str, bool] = field(default_factory=dict)


def generate_synthetic_corpus(config: SynthConfig, seed: int) -> SynthResult:
    """Deterministic for a fixed seed. Every CI-positive patient gets at
    least one Yes note; keywords are cycled so all 18 appear in any
    reasonably sized corpus."""
    if config.n_patients <= 0:
        raise ValueError("n_patients must be positive")
    rng = random.Random(seed)
    keywords = [e.keyword for e in default_lexicon()]
    result = SynthResult(Corpus())
    kw_cursor = 0

    for i in range(config.n_patients):
        pid = f"p{i:05d}"
        ci = rng.random() < config.ci_fraction
        result.patient_gold[pid] = ci
        apoe = _draw_apoe(rng, ci)
        result.corpus.patients[pid] = PatientRecord(
            patient_id=pid,
            age_years=round(min(100.0, max(60.0, rng.gauss(73.01, 7.96))), 1),
            gender=Gender.MALE if rng.random() < 0.532 else Gender.FEMALE,
            apoe=apoe,
            med_icd_flag=rng.random() < (0.75 if ci else 0.05),
        )
        n_notes = rng.randint(config.min_notes, config.max_notes)
        for j in range(n_notes):
            nid = f"{pid}-n{j}"
            keyword = keywords[kw_cursor % len(keywords)]
            kw_cursor += 1
            if ci:
                # first note always carries Yes evidence
                if j == 0 or rng.random() < 0.7:
                    label, text = _yes_note(rng, keyword)
                    confounder = False
                else:
                    label, text, confounder = _background_note(rng, keyword, 0.0)
            else:
                label, text, confounder = _background_note(
                    rng, keyword, config.confounder_rate
                )
            sentences = rng.sample(FILLER_SENTENCES, k=rng.randint(1, 3))
            insert_at = rng.randint(0, len(sentences))
            sentences.insert(insert_at, text)
            result.corpus.notes[nid] = Note(
                note_id=nid,
                patient_id=pid,
                timestamp=f"2021-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
                text=" ".join(sentences),
            )
            result.note_gold[nid] = NoteGold(label=label, confounder=confounder)
    return result


def _yes_note(rng: random.Random, keyword: str) -> tuple[str, str]:
    pool = YES_TEMPLATES + YES_PAIRED_TEMPLATES
    return LABEL_YES, rng.choice(pool).format(kw=keyword)


def _background_note(
    rng: random.Random, keyword: str, confounder_rate: float
) -> tuple[str, str, bool]:
    if rng.random() < confounder_rate:
        return LABEL_NEITHER, rng.choice(CONFOUNDER_TEMPLATES).format(kw=keyword), True
    if rng.random() < 0.5:
        return LABEL_NO, rng.choice(NO_TEMPLATES).format(kw=keyword), False
    return LABEL_NEITHER, rng.choice(NEITHER_TEMPLATES).format(kw=keyword), False


def _draw_apoe(rng: random.Random, ci: bool) -> Apoe:
    r = rng.random()
    if ci:
        cuts = [(0.08, Apoe.E2), (0.60, Apoe.E3), (0.98, Apoe.E4)]
    else:
        cuts = [(0.14, Apoe.E2), (0.78, Apoe.E3), (0.98, Apoe.E4)]
    for cut, allele in cuts:
        if r < cut:
            return allele
    return Apoe.UNKNOWN


def write_gold(result: SynthResult, path: str | Path) -> None:
    """Note-level gold labels plus patient-level CI status, line-delimited."""
    with open(path, "w", encoding="utf-8") as f:
        for nid in sorted(result.note_gold):
            rec = {"note_id": nid, **result.note_gold[nid].as_dict()}
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        for pid in sorted(result.patient_gold):
            rec = {"patient_id": pid, "ci": result.patient_gold[pid]}
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def read_gold(path: str | Path) -> tuple[dict[str, NoteGold], dict[str, bool]]:
    note_gold: dict[str, NoteGold] = {}
    patient_gold: dict[str, bool] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "note_id" in rec:
                note_gold[rec["note_id"]] = NoteGold(rec["label"], rec["confounder"])
            else:
                patient_gold[rec["patient_id"]] = rec["ci"]
    return note_gold, patient_gold
