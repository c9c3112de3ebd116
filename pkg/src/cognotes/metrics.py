"""Sequence-level evaluation: ROC AUC, the full metric table, and holdout
reports shaped like the model-performance table."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotations import LABELS


def roc_auc(scores, y_true) -> float:
    """Mann-Whitney U normalized by n_pos * n_neg; ties count 1/2."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y_true, dtype=int)
    if len(scores) != len(y):
        raise ValueError("scores and labels must have equal length")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = ranks[y == 1].sum()
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class MetricReport:
    accuracy: float
    sensitivity: float
    specificity: float
    micro_f1: float
    macro_f1: float
    weighted_f1: float
    confusion: list[list[int]]  # rows = truth, LABELS order
    auc: float | None = None

    def as_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "confusion": self.confusion,
        }
        if self.auc is not None:
            d["auc"] = self.auc
        return d


def confusion_matrix(predicted, truth, classes=LABELS) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=int)
    for p, t in zip(predicted, truth):
        cm[index[t], index[p]] += 1
    return cm


def _f1(tp: int, fp: int, fn: int) -> float:
    # absent class (no support, no predictions) contributes F1 = 0
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def classification_metrics(predicted, truth, classes=LABELS) -> MetricReport:
    """Accuracy, Yes-recall sensitivity, merged-not-Yes specificity, and
    micro/macro/weighted F1 over the three classes."""
    if len(predicted) != len(truth) or not truth:
        raise ValueError("label vectors must be equal-length and non-empty")
    cm = confusion_matrix(predicted, truth, classes)
    n = cm.sum()
    accuracy = float(np.trace(cm) / n)

    yes = classes.index("Yes")
    yes_support = cm[yes].sum()
    sensitivity = float(cm[yes, yes] / yes_support) if yes_support else 0.0
    not_yes_support = n - yes_support
    not_yes_correct = n - cm[yes].sum() - cm[:, yes].sum() + cm[yes, yes]
    specificity = float(not_yes_correct / not_yes_support) if not_yes_support else 0.0

    per_class_f1 = []
    supports = []
    tp_total = fp_total = fn_total = 0
    for k in range(len(classes)):
        tp = int(cm[k, k])
        fp = int(cm[:, k].sum() - tp)
        fn = int(cm[k].sum() - tp)
        per_class_f1.append(_f1(tp, fp, fn))
        supports.append(int(cm[k].sum()))
        tp_total += tp
        fp_total += fp
        fn_total += fn
    micro_f1 = _f1(tp_total, fp_total, fn_total)
    macro_f1 = float(np.mean(per_class_f1))
    weighted_f1 = float(
        sum(f * s for f, s in zip(per_class_f1, supports)) / n
    )
    return MetricReport(
        accuracy=accuracy,
        sensitivity=sensitivity,
        specificity=specificity,
        micro_f1=micro_f1,
        macro_f1=macro_f1,
        weighted_f1=weighted_f1,
        confusion=cm.tolist(),
    )


def evaluate_predictions(
    probas: np.ndarray, truth: list[str], decision_threshold: float,
    classes=LABELS,
) -> MetricReport:
    """Yes-vs-rest threshold metrics plus 3-class argmax metrics.

    Sensitivity/specificity/accuracy and AUC use the Yes probability
    against the decision threshold; the F1 family uses 3-class argmax.
    """
    if len(probas) == 0:
        raise ValueError("empty test set")
    yes = classes.index("Yes")
    yes_scores = probas[:, yes]
    y_bin = [1 if t == "Yes" else 0 for t in truth]
    argmax_pred = [classes[i] for i in probas.argmax(axis=1)]
    # threshold overrides the Yes decision; argmax breaks the not-Yes tie
    thresholded = []
    for i, s in enumerate(yes_scores):
        if s >= decision_threshold:
            thresholded.append("Yes")
        elif argmax_pred[i] != "Yes":
            thresholded.append(argmax_pred[i])
        else:
            rest = [(probas[i, k], classes[k]) for k in range(len(classes)) if k != yes]
            thresholded.append(max(rest)[1])
    report = classification_metrics(thresholded, truth, classes)
    three_class = classification_metrics(argmax_pred, truth, classes)
    report.micro_f1 = three_class.micro_f1
    report.macro_f1 = three_class.macro_f1
    report.weighted_f1 = three_class.weighted_f1
    report.auc = roc_auc(yes_scores.tolist(), y_bin)
    return report


def format_report(report: MetricReport, name: str = "model") -> str:
    """Structured text table mirroring the performance-table row shape."""
    header = (
        f"{'Model':<12} {'AUC':>6} {'Accuracy':>9} {'Sensitivity':>12} "
        f"{'Specificity':>12} {'MicroF1':>8} {'MacroF1':>8} {'WeightedF1':>11}"
    )
    auc = f"{report.auc:.4f}" if report.auc is not None else "   n/a"
    row = (
        f"{name:<12} {auc:>6} {report.accuracy:>9.4f} {report.sensitivity:>12.4f} "
        f"{report.specificity:>12.4f} {report.micro_f1:>8.4f} "
        f"{report.macro_f1:>8.4f} {report.weighted_f1:>11.4f}"
    )
    lines = [header, row, "", "Confusion matrix (rows = truth, order Yes/No/Neither):"]
    for label, counts in zip(LABELS, report.confusion):
        lines.append(f"  {label:<8} " + " ".join(f"{c:>7}" for c in counts))
    return "\n".join(lines)
