import json
import math

import pytest

from cognotes.corpus import (
    Lexicon,
    LexiconEntry,
    default_lexicon,
    ingest_corpus,
    write_corpus,
)
from cognotes.synth import SynthConfig, generate_synthetic_corpus, write_gold


def _write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


PATIENTS = [
    {"patient_id": "p1", "age_years": 72, "gender": "female", "apoe": "e4",
     "med_icd_flag": True},
    {"patient_id": "p2", "age_years": 66, "gender": "male", "apoe": "e3",
     "med_icd_flag": False},
]

NOTES = [
    {"note_id": "n1", "patient_id": "p1", "timestamp": "2021-01-02",
     "text": "Memory concerns discussed."},
    {"note_id": "n2", "patient_id": "p1", "timestamp": "2021-02-03",
     "text": "Follow up on cognition."},
    {"note_id": "n3", "patient_id": "p2", "timestamp": "2021-03-04",
     "text": "Routine visit."},
]


class TestIngest:
    def test_counts(self, tmp_path):
        _write_jsonl(tmp_path / "p.jsonl", PATIENTS)
        _write_jsonl(tmp_path / "n.jsonl", NOTES)
        corpus = ingest_corpus(tmp_path / "p.jsonl", tmp_path / "n.jsonl")
        assert len(corpus.patients) == 2
        assert len(corpus.notes) == 3
        assert not corpus.errors

    def test_unknown_patient_rejected(self, tmp_path):
        _write_jsonl(tmp_path / "p.jsonl", PATIENTS)
        bad = NOTES + [{"note_id": "n4", "patient_id": "ghost",
                        "timestamp": "2021-01-01", "text": "x y"}]
        _write_jsonl(tmp_path / "n.jsonl", bad)
        corpus = ingest_corpus(tmp_path / "p.jsonl", tmp_path / "n.jsonl")
        assert len(corpus.notes) == 3
        assert len(corpus.errors) == 1
        assert corpus.errors[0].line_number == 4

    def test_empty_notes_file(self, tmp_path):
        _write_jsonl(tmp_path / "p.jsonl", PATIENTS)
        (tmp_path / "n.jsonl").write_text("")
        corpus = ingest_corpus(tmp_path / "p.jsonl", tmp_path / "n.jsonl")
        assert len(corpus.notes) == 0

    def test_duplicate_patient_hard_error(self, tmp_path):
        _write_jsonl(tmp_path / "p.jsonl", PATIENTS + [PATIENTS[0]])
        _write_jsonl(tmp_path / "n.jsonl", NOTES)
        with pytest.raises(ValueError, match="duplicate patient_id"):
            ingest_corpus(tmp_path / "p.jsonl", tmp_path / "n.jsonl")

    def test_malformed_line_continues(self, tmp_path):
        text = "\n".join(json.dumps(r) for r in PATIENTS)
        (tmp_path / "p.jsonl").write_text(text + "\nnot json\n")
        _write_jsonl(tmp_path / "n.jsonl", NOTES)
        corpus = ingest_corpus(tmp_path / "p.jsonl", tmp_path / "n.jsonl")
        assert len(corpus.patients) == 2
        assert any(e.line_number == 3 for e in corpus.errors)

    def test_roundtrip_lossless(self, tmp_path):
        _write_jsonl(tmp_path / "p.jsonl", PATIENTS)
        _write_jsonl(tmp_path / "n.jsonl", NOTES)
        corpus = ingest_corpus(tmp_path / "p.jsonl", tmp_path / "n.jsonl")
        write_corpus(corpus, tmp_path / "p2.jsonl", tmp_path / "n2.jsonl")
        again = ingest_corpus(tmp_path / "p2.jsonl", tmp_path / "n2.jsonl")
        assert again.patients == corpus.patients
        assert again.notes == corpus.notes


class TestLexicon:
    def test_default_has_18_keywords(self):
        assert len(default_lexicon()) == 18

    def test_ad_entry_case_sensitive(self):
        entries = {e.keyword: e for e in default_lexicon()}
        assert entries["AD"].case_sensitive is True
        assert entries["Memory"].case_sensitive is False

    def test_case_insensitive_match(self):
        entry = next(e for e in default_lexicon() if e.keyword == "Dementia")
        assert entry.pattern().search("history of dementia noted")
        assert entry.pattern().search("Dementia workup")

    def test_acronym_does_not_match_lowercase(self):
        entry = next(e for e in default_lexicon() if e.keyword == "AD")
        assert entry.pattern().search("diagnosed with AD today")
        assert not entry.pattern().search("ad placement on chart")
        assert not entry.pattern().search("ADVERSE event")

    def test_multiword_flexible_whitespace(self):
        entry = next(
            e for e in default_lexicon() if e.keyword == "Cognitive Impairment"
        )
        assert entry.pattern().search("mild cognitive  impairment seen")

    def test_duplicate_after_casefold_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Lexicon([LexiconEntry("Memory"), LexiconEntry("memory")])


class TestSynth:
    def test_deterministic(self):
        a = generate_synthetic_corpus(SynthConfig(40), seed=1)
        b = generate_synthetic_corpus(SynthConfig(40), seed=1)
        assert a.corpus.patients == b.corpus.patients
        assert a.corpus.notes == b.corpus.notes
        assert a.note_gold == b.note_gold

    def test_gold_file_byte_identical(self, tmp_path):
        paths = []
        for name in ("a", "b"):
            r = generate_synthetic_corpus(SynthConfig(40), seed=7)
            p = tmp_path / f"{name}.jsonl"
            write_gold(r, p)
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]

    def test_zero_patients_error(self):
        with pytest.raises(ValueError):
            generate_synthetic_corpus(SynthConfig(0), seed=1)

    def test_zero_confounder_rate(self):
        r = generate_synthetic_corpus(
            SynthConfig(200, confounder_rate=0.0), seed=3
        )
        assert not any(g.confounder for g in r.note_gold.values())

    def test_ci_fraction_within_binomial_ci(self):
        # 95% binomial CI for n=1000, p=0.2: 0.2 +/- 1.96*sqrt(0.2*0.8/1000)
        n, p = 1000, 0.2
        half_width = 1.96 * math.sqrt(p * (1 - p) / n)
        r = generate_synthetic_corpus(SynthConfig(n, ci_fraction=p), seed=11)
        frac = sum(r.patient_gold.values()) / n
        assert abs(frac - p) <= half_width

    def test_ci_patients_have_yes_note(self):
        r = generate_synthetic_corpus(SynthConfig(150), seed=5)
        yes_patients = {
            note.patient_id
            for note in r.corpus.notes.values()
            if r.note_gold[note.note_id].label == "Yes"
        }
        for pid, ci in r.patient_gold.items():
            if ci:
                assert pid in yes_patients
