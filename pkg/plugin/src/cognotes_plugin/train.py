"""Fine-tuning with a seeded random hyperparameter search.

Each trial draws a learning rate, Adam epsilon and epoch budget, trains
from a trial-specific seed, and evaluates on the validation export after
every epoch. Training stops early when validation loss fails to improve
by more than 1e-4 over three consecutive evaluations. The best trial by
validation Yes-vs-rest AUC is saved together with a study log recording
every trial.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import LABELS, Vocab, read_export
from .encoder import SequenceEncoder

PLATEAU_DELTA = 1e-4
PLATEAU_PATIENCE = 3


@dataclass
class TrialRecord:
    trial: int
    learning_rate: float
    adam_epsilon: float
    epoch_budget: int
    stopped_epoch: int
    val_loss: float
    val_auc: float


def yes_vs_rest_auc(yes_probs: np.ndarray, labels: list[str]) -> float:
    """Rank-based AUC with ties counted one half."""
    y = np.array([1 if lab == "Yes" else 0 for lab in labels])
    n_pos, n_neg = int(y.sum()), int((1 - y).sum())
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(yes_probs, kind="mergesort")
    ranks = np.empty(len(yes_probs), dtype=float)
    sorted_scores = yes_probs[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _encode_rows(rows: list[dict], vocab: Vocab, max_len: int):
    X = torch.tensor([vocab.encode(r["text"], max_len) for r in rows])
    y = torch.tensor([LABELS.index(r["label"]) for r in rows])
    return X, y


def _evaluate(model, X, y, batch_size: int = 256):
    loss_fn = nn.CrossEntropyLoss(reduction="sum")
    model.eval()
    total, probs = 0.0, []
    with torch.no_grad():
        for start in range(0, len(X), batch_size):
            logits = model(X[start:start + batch_size])
            total += loss_fn(logits, y[start:start + batch_size]).item()
            probs.append(torch.softmax(logits, dim=1))
    return total / len(X), torch.cat(probs).numpy()


def _run_trial(trial_seed, X_train, y_train, X_val, val_labels, vocab_size,
               lr, eps, epoch_budget, dim, depth, max_len, batch_size):
    torch.manual_seed(trial_seed)
    model = SequenceEncoder(vocab_size, dim=dim, depth=depth, max_len=max_len)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr, eps=eps)
    loss_fn = nn.CrossEntropyLoss()
    order_rng = torch.Generator().manual_seed(trial_seed + 1)

    best_loss = float("inf")
    stale = 0
    stopped = 0
    val_loss, val_probs = float("inf"), None
    for epoch in range(1, epoch_budget + 1):
        model.train()
        perm = torch.randperm(len(X_train), generator=order_rng)
        for start in range(0, len(perm), batch_size):
            idx = perm[start:start + batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(X_train[idx]), y_train[idx])
            loss.backward()
            optimizer.step()
        val_loss, val_probs = _evaluate(model, X_val,
                                        torch.tensor([LABELS.index(l)
                                                      for l in val_labels]))
        stopped = epoch
        if val_loss < best_loss - PLATEAU_DELTA:
            best_loss = val_loss
            stale = 0
        else:
            stale += 1
            if stale >= PLATEAU_PATIENCE:
                break
    auc = yes_vs_rest_auc(val_probs[:, 0], val_labels)
    return model, val_loss, auc, stopped


def finetune(
    train_path: str | Path,
    val_path: str | Path,
    out_dir: str | Path,
    trials: int = 20,
    seed: int = 0,
    dim: int = 64,
    depth: int = 2,
    max_len: int = 160,
    batch_size: int = 32,
) -> list[TrialRecord]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    train_rows = read_export(train_path)
    val_rows = read_export(val_path)
    torch.set_num_threads(1)

    vocab = Vocab.from_texts([r["text"] for r in train_rows])
    X_train, y_train = _encode_rows(train_rows, vocab, max_len)
    X_val, _ = _encode_rows(val_rows, vocab, max_len)
    val_labels = [r["label"] for r in val_rows]

    rng = random.Random(seed)
    log: list[TrialRecord] = []
    best = None  # (auc, record, state_dict)
    for trial in range(trials):
        lr = 10.0 ** rng.uniform(-3.8, -2.4)
        eps = 10.0 ** rng.uniform(-9.0, -6.0)
        epoch_budget = rng.randint(4, 12)
        model, val_loss, auc, stopped = _run_trial(
            seed * 1009 + trial, X_train, y_train, X_val, val_labels,
            len(vocab), lr, eps, epoch_budget, dim, depth, max_len, batch_size,
        )
        record = TrialRecord(trial, lr, eps, epoch_budget, stopped,
                             val_loss, auc)
        log.append(record)
        score = -1.0 if np.isnan(auc) else auc
        if best is None or score > best[0]:
            best = (score, record, model.state_dict())

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocab.json")
    torch.save(best[2], out / "model.pt")
    config = {
        "dim": dim, "depth": depth, "max_len": max_len,
        "classes": list(LABELS), "vocab_size": len(vocab),
        "best_trial": asdict(best[1]), "seed": seed,
    }
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2, sort_keys=True)
    with open(out / "study_log.json", "w", encoding="utf-8") as f:
        json.dump([asdict(r) for r in log], f, indent=2, sort_keys=True)
    return log
