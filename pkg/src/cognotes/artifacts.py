"""Artifact serialization, config hashing, and run-manifest sidecars."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__
from .features import TfidfModel
from .model import LinearModel


def config_hash(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def manifest_path(path: str | Path) -> Path:
    return Path(str(path) + ".manifest.json")


def write_manifest(
    path: str | Path,
    stage: str,
    config: dict,
    root_hash: str | None = None,
    inputs: dict | None = None,
) -> str:
    """Sidecar manifest recording the producing stage, its config hash, and
    the lineage root so downstream stages can detect mismatched inputs."""
    chash = config_hash(config)
    manifest = {
        "stage": stage,
        "version": __version__,
        "config": config,
        "config_hash": chash,
        "root_hash": root_hash or chash,
        "inputs": inputs or {},
    }
    manifest_path(path).write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return manifest["root_hash"]


def read_manifest(path: str | Path) -> dict | None:
    mp = manifest_path(path)
    if not mp.exists():
        return None
    return json.loads(mp.read_text(encoding="utf-8"))


def check_lineage(paths: list[str | Path], force: bool = False) -> str | None:
    """All given artifacts must share one lineage root unless forced."""
    roots = {}
    for p in paths:
        m = read_manifest(p)
        if m is not None:
            roots[str(p)] = m["root_hash"]
    distinct = set(roots.values())
    if len(distinct) > 1 and not force:
        raise ValueError(
            f"upstream artifacts come from different runs: {roots}; "
            "pass --force to override"
        )
    return next(iter(distinct)) if distinct else None


def save_model_artifact(
    path: str | Path,
    tfidf: TfidfModel,
    linear: LinearModel,
    cv_table: list[dict] | None = None,
    config: dict | None = None,
) -> None:
    """Single self-describing file: tokenizer/vocab/idf/selection, linear
    weights, the tuned decision threshold, and the CV table."""
    config = config or {}
    payload = {
        "format": "cognotes-model",
        "version": __version__,
        "config": config,
        "config_hash": config_hash(config),
        "tokenizer_config": {"lowercase": True, "token_rule": "alnum_len2"},
        "tfidf": tfidf.as_dict(),
        "linear": linear.as_dict(),
        "cv_table": cv_table or [],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_model_artifact(path: str | Path) -> tuple[TfidfModel, LinearModel, dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "cognotes-model":
        raise ValueError(f"{path} is not a model artifact")
    tfidf = TfidfModel.from_dict(payload["tfidf"])
    linear = LinearModel.from_dict(payload["linear"])
    return tfidf, linear, payload
