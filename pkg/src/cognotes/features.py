"""TF-IDF vectorization and Pearson-correlation feature selection."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")
MIN_TOKEN_LEN = 2


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs of length >= 2."""
    return [t.lower() for t in _TOKEN_RE.findall(text) if len(t) >= MIN_TOKEN_LEN]


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]  # token -> column
    idf: np.ndarray  # per column, >= 0
    selected: list[int] = field(default_factory=list)
    correlations: dict[int, float] = field(default_factory=dict)  # column -> r

    def transform(self, texts: list[str]) -> np.ndarray:
        """L2-normalized tf-idf rows; out-of-vocabulary tokens contribute
        nothing. All-zero rows stay zero."""
        X = np.zeros((len(texts), len(self.vocabulary)))
        for i, text in enumerate(texts):
            for token in tokenize(text):
                col = self.vocabulary.get(token)
                if col is not None:
                    X[i, col] += 1.0
        X *= self.idf
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return X / norms

    def transform_selected(self, texts: list[str]) -> np.ndarray:
        return self.transform(texts)[:, self.selected]

    def selected_tokens(self) -> list[str]:
        inv = {v: k for k, v in self.vocabulary.items()}
        return [inv[c] for c in self.selected]

    def as_dict(self) -> dict:
        return {
            "vocabulary": self.vocabulary,
            "idf": self.idf.tolist(),
            "selected": list(self.selected),
            "correlations": {str(c): r for c, r in self.correlations.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfModel":
        return cls(
            vocabulary=d["vocabulary"],
            idf=np.asarray(d["idf"], dtype=float),
            selected=list(d["selected"]),
            correlations={int(c): float(r) for c, r in d["correlations"].items()},
        )


def fit_tfidf(texts: list[str]) -> TfidfModel:
    """Vocabulary and smoothed idf from the training texts only.

    tf is the raw in-document count; idf = ln((1+N)/(1+df)) + 1; rows are
    L2-normalized at transform time.
    """
    if not texts:
        raise ValueError("need at least one document")
    docs = [tokenize(t) for t in texts]
    vocab_tokens = sorted({tok for doc in docs for tok in doc})
    if not vocab_tokens:
        raise ValueError("all documents are empty after tokenization")
    vocabulary = {tok: i for i, tok in enumerate(vocab_tokens)}
    df = np.zeros(len(vocabulary))
    for doc in docs:
        for tok in set(doc):
            df[vocabulary[tok]] += 1
    n = len(docs)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf)


def pearson_correlations(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-column Pearson r with a binary outcome; NaN for constant columns."""
    y = np.asarray(y, dtype=float)
    if np.all(y == y[0]):
        raise ValueError("correlation undefined: all labels identical")
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt((Xc**2).sum(axis=0))
    sy = np.sqrt((yc**2).sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (Xc * yc[:, None]).sum(axis=0) / (sx * sy)
    r[sx == 0] = np.nan
    return r


def pearson_select(
    model: TfidfModel, X: np.ndarray, y: np.ndarray, threshold: float
) -> TfidfModel:
    """Retain columns with |r| >= threshold against the binarized outcome;
    constant columns are always dropped. Returns a new model."""
    r = pearson_correlations(X, y)
    keep = [
        c for c in range(X.shape[1])
        if not np.isnan(r[c]) and abs(r[c]) >= threshold
    ]
    return TfidfModel(
        vocabulary=model.vocabulary,
        idf=model.idf,
        selected=keep,
        correlations={c: float(r[c]) for c in keep},
    )


def binarize_labels(labels: list[str]) -> np.ndarray:
    """Yes -> 1; No/Neither -> 0 (the cognitive-impairment outcome)."""
    return np.array([1.0 if lab == "Yes" else 0.0 for lab in labels])


def feature_report(model: TfidfModel, top_k: int = 20) -> list[tuple[str, float]]:
    """Top-k selected tokens by |r| descending; ties ordered by token."""
    inv = {v: k for k, v in model.vocabulary.items()}
    rows = [(inv[c], model.correlations[c]) for c in model.selected]
    rows.sort(key=lambda tr: (-abs(tr[1]), tr[0]))
    return rows[:top_k]
