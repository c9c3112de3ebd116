"""L1-regularized multinomial logistic regression via proximal gradient,
with patient-grouped cross-validation over (lambda, correlation threshold)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotations import LABELS, AnnotationStore
from .features import binarize_labels, fit_tfidf, pearson_select
from .metrics import roc_auc

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 10000


@dataclass
class LinearModel:
    weights: np.ndarray  # classes x features
    intercepts: np.ndarray  # per class, unpenalized
    lam: float
    classes: tuple = LABELS
    decision_threshold: float = 0.5
    converged: bool = True
    objective_path: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercepts": self.intercepts.tolist(),
            "lambda": self.lam,
            "classes": list(self.classes),
            "decision_threshold": self.decision_threshold,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=float),
            intercepts=np.asarray(d["intercepts"], dtype=float),
            lam=float(d["lambda"]),
            classes=tuple(d["classes"]),
            decision_threshold=float(d["decision_threshold"]),
            converged=bool(d["converged"]),
        )


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _one_hot(labels, classes) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    Y = np.zeros((len(labels), len(classes)))
    for i, lab in enumerate(labels):
        Y[i, index[lab]] = 1.0
    return Y


def objective(
    X: np.ndarray, Y: np.ndarray, W: np.ndarray, b: np.ndarray, lam: float
) -> float:
    """Mean multinomial negative log-likelihood + lam * sum|W|."""
    scores = X @ W.T + b
    z = scores - scores.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1)) + scores.max(axis=1)
    nll = (logsumexp - (scores * Y).sum(axis=1)).mean()
    return nll + lam * np.abs(W).sum()


def smooth_gradient(
    X: np.ndarray, Y: np.ndarray, W: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the mean NLL with respect to (W, b)."""
    P = _softmax(X @ W.T + b)
    G = (P - Y) / X.shape[0]
    return G.T @ X, G.sum(axis=0)


def fit(
    X: np.ndarray,
    labels,
    lam: float,
    classes=LABELS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LinearModel:
    """Proximal-gradient (ISTA) minimization from a zero initialization.

    The step size comes from the softmax Lipschitz bound, so the objective
    is non-increasing across iterations. Intercepts are unpenalized.
    """
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    present = set(labels)
    if len(present) < 2:
        raise ValueError("need at least 2 classes present in labels")
    Y = _one_hot(labels, classes)
    n, d = X.shape
    K = len(classes)
    Xt = np.hstack([X, np.ones((n, 1))])
    sigma_max = np.linalg.norm(Xt, 2) if n and d + 1 else 1.0
    L = max(sigma_max**2 / (2.0 * n), 1e-12)
    step = 1.0 / L

    W = np.zeros((K, d))
    b = np.zeros(K)
    path = [objective(X, Y, W, b, lam)]
    converged = False
    for _ in range(max_iter):
        gW, gb = smooth_gradient(X, Y, W, b)
        W_new = W - step * gW
        W_new = np.sign(W_new) * np.maximum(np.abs(W_new) - step * lam, 0.0)
        b_new = b - step * gb
        delta = max(
            np.abs(W_new - W).max(initial=0.0), np.abs(b_new - b).max(initial=0.0)
        )
        W, b = W_new, b_new
        path.append(objective(X, Y, W, b, lam))
        if delta < tol:
            converged = True
            break
    return LinearModel(
        weights=W,
        intercepts=b,
        lam=lam,
        classes=tuple(classes),
        converged=converged,
        objective_path=path,
    )


def predict_proba(model: LinearModel, X: np.ndarray) -> np.ndarray:
    """Softmax class distributions, rows summing to 1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.weights.shape[1]:
        raise ValueError(
            f"feature length {X.shape[1]} does not match model "
            f"({model.weights.shape[1]})"
        )
    return _softmax(X @ model.weights.T + model.intercepts)


# -- cross-validation -----------------------------------------------------


@dataclass
class CvPlan:
    lambda_grid: list[float]  # descending positive reals
    threshold_grid: list[float]
    n_folds: int = 10
    seed: int = 0
    max_iter: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if not self.lambda_grid or not self.threshold_grid:
            raise ValueError("grids must be non-empty")


DEFAULT_LAMBDA_GRID = list(np.logspace(1, -4, 10))
DEFAULT_THRESHOLD_GRID = [0.0, 0.05, 0.1, 0.15, 0.2]


@dataclass
class CvResult:
    best_lambda: float
    best_threshold: float
    table: list[dict]  # lambda, threshold, mean_auc, n_folds_used, nnz
    warnings: list[str] = field(default_factory=list)


def patient_folds(patient_ids: list[str], n_folds: int, seed: int) -> list[int]:
    """Fold index per item; all items of a patient share a fold."""
    import random

    patients = sorted(set(patient_ids))
    rng = random.Random(seed)
    rng.shuffle(patients)
    assign = {p: i % n_folds for i, p in enumerate(patients)}
    return [assign[p] for p in patient_ids]


def cross_validate(
    texts: list[str],
    labels: list[str],
    patient_ids: list[str],
    plan: CvPlan,
) -> CvResult:
    """Mean Yes-vs-rest validation AUC per (lambda, threshold) cell.

    TF-IDF and feature selection are re-fit inside each fold on the
    training folds only. Ties prefer larger lambda then larger threshold.
    """
    folds = patient_folds(patient_ids, plan.n_folds, plan.seed)
    folds = np.asarray(folds)
    labels_arr = np.asarray(labels)
    warnings: list[str] = []
    table: list[dict] = []

    fold_data = []
    for k in range(plan.n_folds):
        val_mask = folds == k
        if not val_mask.any() or val_mask.all():
            continue
        if "Yes" not in labels_arr[val_mask]:
            warnings.append(f"fold {k} skipped: no Yes examples in validation")
            continue
        fold_data.append((k, val_mask))
    if not fold_data:
        raise ValueError("all folds skipped; cannot cross-validate")

    for threshold in sorted(plan.threshold_grid):
        per_fold_features = []
        for k, val_mask in fold_data:
            train_idx = np.flatnonzero(~val_mask)
            val_idx = np.flatnonzero(val_mask)
            train_texts = [texts[i] for i in train_idx]
            base = fit_tfidf(train_texts)
            Xtr_full = base.transform(train_texts)
            ybin = binarize_labels([labels[i] for i in train_idx])
            selected = pearson_select(base, Xtr_full, ybin, threshold)
            Xtr = Xtr_full[:, selected.selected]
            Xva = selected.transform_selected([texts[i] for i in val_idx])
            per_fold_features.append((train_idx, val_idx, Xtr, Xva))
        for lam in sorted(plan.lambda_grid, reverse=True):
            aucs = []
            nnz = []
            for (train_idx, val_idx, Xtr, Xva) in per_fold_features:
                if Xtr.shape[1] == 0:
                    continue
                lm = fit(
                    Xtr,
                    [labels[i] for i in train_idx],
                    lam,
                    tol=plan.tol,
                    max_iter=plan.max_iter,
                )
                proba = predict_proba(lm, Xva)
                yes_scores = proba[:, 0]
                y_true = [1 if labels[i] == "Yes" else 0 for i in val_idx]
                aucs.append(roc_auc(yes_scores.tolist(), y_true))
                nnz.append(int((lm.weights != 0).sum()))
            table.append(
                {
                    "lambda": float(lam),
                    "threshold": float(threshold),
                    "mean_auc": float(np.mean(aucs)) if aucs else float("nan"),
                    "n_folds_used": len(aucs),
                    "mean_nnz": float(np.mean(nnz)) if nnz else 0.0,
                }
            )

    valid = [row for row in table if row["n_folds_used"] > 0]
    if not valid:
        raise ValueError("no usable (lambda, threshold) cells")
    best = max(valid, key=lambda r: (r["mean_auc"], r["lambda"], r["threshold"]))
    return CvResult(
        best_lambda=best["lambda"],
        best_threshold=best["threshold"],
        table=table,
        warnings=warnings,
    )


# -- decision threshold -----------------------------------------------------


def tune_decision_threshold(yes_scores, y_true) -> float:
    """Accuracy-maximizing cutoff over midpoints of consecutive distinct
    Yes-probabilities; ties resolved toward the lowest threshold."""
    yes_scores = list(map(float, yes_scores))
    y_true = list(map(int, y_true))
    if len(set(y_true)) < 2:
        raise ValueError("need both positive and negative validation examples")
    distinct = sorted(set(yes_scores))
    if len(distinct) == 1:
        return distinct[0]
    candidates = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    best_t, best_acc = None, -1.0
    for t in candidates:
        acc = sum(
            1 for s, y in zip(yes_scores, y_true) if (s >= t) == bool(y)
        ) / len(y_true)
        if acc > best_acc:
            best_t, best_acc = t, acc
    return best_t
