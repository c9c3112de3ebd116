"""Command-line pipeline: ingest, extract, synth, serve, train, evaluate,
predict, aggregate, compare, report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import aggregate as agg
from . import artifacts, features, metrics, model, protocol
from .annotations import AnnotationStore, stratified_split
from .corpus import default_lexicon, ingest_corpus, load_lexicon, write_corpus
from .extract import (
    dedupe_overlapping,
    extract_sequences,
    extraction_report,
    read_sequences,
    write_sequences,
)
from .synth import SynthConfig, generate_synthetic_corpus, read_gold, write_gold


def _fail(message: str, code: int = 1) -> int:
    sys.stderr.write(json.dumps({"error": message}, sort_keys=True) + "\n")
    return code


def _require_files(*paths) -> str | None:
    for p in paths:
        if p is None or not Path(p).exists():
            return f"missing input: {p}"
    return None


def _lexicon(args):
    if getattr(args, "lexicon", None):
        return load_lexicon(args.lexicon)
    return default_lexicon()


# -- stage implementations ------------------------------------------------


def cmd_synth(args) -> int:
    config = SynthConfig(
        n_patients=args.n_patients,
        ci_fraction=args.ci_fraction,
        confounder_rate=args.confounder_rate,
    )
    result = generate_synthetic_corpus(config, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(result.corpus, out / "patients.jsonl", out / "notes.jsonl")
    write_gold(result, out / "gold.jsonl")
    cfg = {"stage": "synth", "seed": args.seed, "n_patients": args.n_patients,
           "ci_fraction": args.ci_fraction, "confounder_rate": args.confounder_rate}
    for name in ("patients.jsonl", "notes.jsonl", "gold.jsonl"):
        artifacts.write_manifest(out / name, "synth", cfg)
    print(f"wrote {len(result.corpus.patients)} patients, "
          f"{len(result.corpus.notes)} notes to {out}")
    return 0


def cmd_ingest(args) -> int:
    missing = _require_files(args.patients, args.notes)
    if missing:
        return _fail(missing, 2)
    corpus = ingest_corpus(args.patients, args.notes)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out / "patients.jsonl", out / "notes.jsonl")
    cfg = {"stage": "ingest", "patients": str(args.patients), "notes": str(args.notes)}
    root = artifacts.check_lineage([args.patients, args.notes], args.force)
    for name in ("patients.jsonl", "notes.jsonl"):
        artifacts.write_manifest(out / name, "ingest", cfg, root_hash=root)
    print(f"accepted {len(corpus.patients)} patients, {len(corpus.notes)} notes; "
          f"{len(corpus.errors)} records rejected")
    for err in corpus.errors:
        print(f"  {err.path}:{err.line_number}: {err.message}")
    return 0


def cmd_extract(args) -> int:
    missing = _require_files(args.patients, args.notes)
    if missing:
        return _fail(missing, 2)
    corpus = ingest_corpus(args.patients, args.notes)
    sequences = dedupe_overlapping(
        extract_sequences(corpus, _lexicon(args), args.window)
    )
    write_sequences(sequences, args.out)
    root = artifacts.check_lineage([args.patients, args.notes], args.force)
    artifacts.write_manifest(
        args.out, "extract",
        {"stage": "extract", "window": args.window}, root_hash=root,
    )
    print(f"extracted {len(sequences)} sequences")
    for keyword, count in extraction_report(sequences):
        print(f"  {keyword:<22} {count}")
    return 0


def _store_from_gold(sequences, gold_path) -> AnnotationStore:
    note_gold, _ = read_gold(gold_path)
    store = AnnotationStore(sequences)
    for seq in sequences:
        gold = note_gold.get(seq.note_id)
        if gold is not None:
            store.annotate(seq.sequence_id, gold.label, "gold")
    return store


def _subset_store(store: AnnotationStore, ids: list[str]) -> AnnotationStore:
    sub = AnnotationStore([store.sequences[sid] for sid in ids])
    for sid in ids:
        ann = store.annotations.get(sid)
        if ann is not None:
            sub.annotate(sid, ann.label, ann.provenance_id)
    return sub


def _write_export(store: AnnotationStore, ids: list[str], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for sid in sorted(ids):
            seq = store.sequences[sid]
            f.write(json.dumps({
                "sequence_id": sid,
                "patient_id": seq.patient_id,
                "text": seq.text,
                "label": store.annotations[sid].label,
            }, sort_keys=True) + "\n")


def read_export(path):
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def cmd_train(args) -> int:
    missing = _require_files(args.sequences, args.gold)
    if missing:
        return _fail(missing, 2)
    sequences = read_sequences(args.sequences)
    store = _store_from_gold(sequences, args.gold)
    split = stratified_split(store, args.train_fraction, args.seed)
    for w in split.warnings:
        print(f"warning: {w}")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_export(store, split.train_ids, out / "train.jsonl")
    _write_export(store, split.test_ids, out / "test.jsonl")

    # carve a validation slice from train for decision-threshold tuning
    train_store = _subset_store(store, split.train_ids)
    inner = stratified_split(train_store, args.train_fraction, args.seed + 1)
    _write_export(train_store, inner.test_ids, out / "val.jsonl")

    lambda_grid = [float(x) for x in args.lambda_grid.split(",")]
    corr_grid = [float(x) for x in args.corr_grid.split(",")]
    plan = model.CvPlan(
        lambda_grid=lambda_grid,
        threshold_grid=corr_grid,
        n_folds=args.folds,
        seed=args.seed + 2,
        max_iter=args.max_iter,
    )
    texts = [store.sequences[sid].text for sid in split.train_ids]
    labels = [store.annotations[sid].label for sid in split.train_ids]
    patient_ids = [store.sequences[sid].patient_id for sid in split.train_ids]
    cv = model.cross_validate(texts, labels, patient_ids, plan)
    for w in cv.warnings:
        print(f"warning: {w}")
    print(f"best lambda={cv.best_lambda:g} corr_threshold={cv.best_threshold:g}")

    # fit on the inner-train slice, tune threshold on the validation slice
    def _fit_on(ids):
        t = [store.sequences[sid].text for sid in ids]
        y = [store.annotations[sid].label for sid in ids]
        base = features.fit_tfidf(t)
        X_full = base.transform(t)
        selected = features.pearson_select(
            base, X_full, features.binarize_labels(y), cv.best_threshold
        )
        lm = model.fit(
            X_full[:, selected.selected], y, cv.best_lambda, max_iter=args.max_iter
        )
        return selected, lm

    tfidf_inner, lm_inner = _fit_on(inner.train_ids)
    val_texts = [store.sequences[sid].text for sid in inner.test_ids]
    val_labels = [store.annotations[sid].label for sid in inner.test_ids]
    val_proba = model.predict_proba(
        lm_inner, tfidf_inner.transform_selected(val_texts)
    )
    threshold = model.tune_decision_threshold(
        val_proba[:, 0], [1 if lab == "Yes" else 0 for lab in val_labels]
    )

    tfidf_final, lm_final = _fit_on(split.train_ids)
    lm_final.decision_threshold = float(threshold)
    cfg = {"stage": "train", "seed": args.seed, "lambda": cv.best_lambda,
           "corr_threshold": cv.best_threshold,
           "train_fraction": args.train_fraction}
    artifacts.save_model_artifact(
        out / "model.json", tfidf_final, lm_final, cv.table, cfg
    )
    root = artifacts.check_lineage([args.sequences, args.gold], args.force)
    for name in ("model.json", "train.jsonl", "val.jsonl", "test.jsonl"):
        artifacts.write_manifest(out / name, "train", cfg, root_hash=root)
    print(f"decision threshold={threshold:.4f}; model written to {out / 'model.json'}")
    return 0


def cmd_evaluate(args) -> int:
    missing = _require_files(args.model, args.test)
    if missing:
        return _fail(missing, 2)
    artifacts.check_lineage([args.model, args.test], args.force)
    tfidf, linear, _ = artifacts.load_model_artifact(args.model)
    rows = read_export(args.test)
    if not rows:
        return _fail("empty test set")
    texts = [r["text"] for r in rows]
    truth = [r["label"] for r in rows]
    proba = model.predict_proba(linear, tfidf.transform_selected(texts))
    report = metrics.evaluate_predictions(proba, truth, linear.decision_threshold)
    print(metrics.format_report(report, name="tfidf-l1"))
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.as_dict(), sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_predict(args) -> int:
    missing = _require_files(args.sequences)
    if missing:
        return _fail(missing, 2)
    sequences = read_sequences(args.sequences)
    if args.external_cmd or args.external_url:
        endpoint = protocol.ExternalEndpoint(
            command=args.external_cmd.split() if args.external_cmd else None,
            url=args.external_url,
            timeout=args.timeout,
        )
        results = protocol.score_with_external(endpoint, sequences)
    else:
        missing = _require_files(args.model)
        if missing:
            return _fail(missing, 2)
        results = protocol.score_with_internal(args.model, sequences)
    by_id = {s.sequence_id: s for s in sequences}
    predictions = []
    errored = 0
    for r in results:
        if not r.ok:
            errored += 1
            continue
        predictions.append(
            agg.SequencePrediction(
                r.sequence_id, by_id[r.sequence_id].patient_id, r.probs
            )
        )
    agg.write_predictions(predictions, args.out)
    root = artifacts.check_lineage([args.sequences], args.force)
    artifacts.write_manifest(args.out, "predict", {"stage": "predict"},
                             root_hash=root)
    print(f"scored {len(predictions)} sequences ({errored} item errors)")
    return 0


def cmd_aggregate(args) -> int:
    missing = _require_files(args.predictions, args.patients)
    if missing:
        return _fail(missing, 2)
    predictions = agg.read_predictions(args.predictions)
    corpus = ingest_corpus(args.patients, "/dev/null")
    assignments = agg.aggregate_patients(
        predictions, args.patient_threshold, patient_ids=list(corpus.patients),
        strict_greater=args.strict_greater,
    )
    agg.write_assignments(assignments, args.out)
    root = artifacts.check_lineage([args.predictions, args.patients], args.force)
    artifacts.write_manifest(
        args.out, "aggregate",
        {"stage": "aggregate", "threshold": args.patient_threshold},
        root_hash=root,
    )
    yes = sum(1 for a in assignments if a.assigned == agg.YES)
    print(f"{yes}/{len(assignments)} patients assigned Yes at t={args.patient_threshold}")
    return 0


def cmd_compare(args) -> int:
    missing = _require_files(args.predictions, args.patients)
    if missing:
        return _fail(missing, 2)
    predictions = agg.read_predictions(args.predictions)
    corpus = ingest_corpus(args.patients, "/dev/null")
    lo, hi = (int(x) for x in args.threshold_range.split(".."))
    tuning = agg.tune_threshold(
        predictions, corpus.patients, range(lo, hi + 1),
        strict_greater=args.strict_greater,
    )
    for w in tuning.warnings:
        print(f"warning: {w}")
    print(f"best patient threshold t={tuning.best_threshold}")
    assignments = agg.aggregate_patients(
        predictions, tuning.best_threshold, patient_ids=list(corpus.patients),
        strict_greater=args.strict_greater,
    )
    report = agg.compare_to_codes(assignments, corpus.patients)
    print(report.format())
    if args.out:
        payload = {"tuning": tuning.table, "best_threshold": tuning.best_threshold,
                   "report": report.as_dict()}
        Path(args.out).write_text(
            json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_report(args) -> int:
    missing = _require_files(args.model)
    if missing:
        return _fail(missing, 2)
    tfidf, _, _ = artifacts.load_model_artifact(args.model)
    print(f"{'Token':<20} {'Corr':>7}")
    for token, r in features.feature_report(tfidf, args.top_k):
        print(f"{token:<20} {r:>7.3f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    missing = _require_files(args.sequences)
    if missing:
        return _fail(missing, 2)
    sequences = read_sequences(args.sequences)
    events = Path(args.events)
    if events.exists():
        store = AnnotationStore.replay(sequences, events)
    else:
        store = AnnotationStore(sequences)
    probabilities = None
    if args.probabilities and Path(args.probabilities).exists():
        probabilities = {
            p.sequence_id: p.probs for p in agg.read_predictions(args.probabilities)
        }
    app = create_app(store, events_path=events, probabilities=probabilities)
    host, port = args.serve_addr.rsplit(":", 1)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


# -- argument parsing ---------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cognotes",
        description="Cognitive-impairment phenotyping over clinical notes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--force", action="store_true",
                       help="accept upstream artifacts from different runs")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--n-patients", type=int, required=True)
    p.add_argument("--ci-fraction", type=float, default=0.2)
    p.add_argument("--confounder-rate", type=float, default=0.15)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate and index a corpus")
    common(p)
    p.add_argument("--patients", required=True)
    p.add_argument("--notes", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="extract keyword sequences")
    common(p)
    p.add_argument("--patients", required=True)
    p.add_argument("--notes", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--window", type=int, default=800)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="cross-validate and fit the linear model")
    common(p)
    p.add_argument("--sequences", required=True)
    p.add_argument("--gold", required=True,
                   help="note-level gold labels or annotation export")
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--lambda-grid",
                   default=",".join(f"{x:g}" for x in model.DEFAULT_LAMBDA_GRID))
    p.add_argument("--corr-grid",
                   default=",".join(str(x) for x in model.DEFAULT_THRESHOLD_GRID))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score the holdout test export")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="score sequences (internal or external)")
    common(p)
    p.add_argument("--model")
    p.add_argument("--sequences", required=True)
    p.add_argument("--external-cmd")
    p.add_argument("--external-url")
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("aggregate", help="patient-level assignments")
    common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--patients", required=True)
    p.add_argument("--patient-threshold", type=int, default=2)
    p.add_argument("--strict-greater", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("compare", help="tune t and compare to Med/ICD codes")
    common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--patients", required=True)
    p.add_argument("--threshold-range", default="1..10")
    p.add_argument("--strict-greater", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="correlation-ranked feature table")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--top-k", type=int, default=20)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    common(p)
    p.add_argument("--sequences", required=True)
    p.add_argument("--events", default="annotations.jsonl")
    p.add_argument("--probabilities")
    p.add_argument("--serve-addr", default="127.0.0.1:8731")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
