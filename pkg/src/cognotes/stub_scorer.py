"""Reference stub scorer speaking the classifier wire protocol on stdio.

Used by the protocol conformance tests and as a template for external
scorers. Modes:
  uniform  - every item gets (1/3, 1/3, 1/3)
  keyword  - crude lexical heuristic over the sequence text
Flags --omit-id / --mangle-id let tests exercise partial-failure handling.

Run: python -m cognotes.stub_scorer [--mode uniform] [--omit-id ID ...]
"""
from __future__ import annotations

import argparse
import json
import sys


def heuristic_probs(text: str) -> tuple[float, float, float]:
    lowered = text.lower()
    if any(w in lowered for w in ("impaired", "decline", "deficit", "forgetful")):
        return (0.8, 0.1, 0.1)
    if any(w in lowered for w in ("intact", "normal", "preserved", "oriented")):
        return (0.1, 0.8, 0.1)
    return (0.2, 0.3, 0.5)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mode", choices=["uniform", "keyword"], default="uniform")
    parser.add_argument("--omit-id", action="append", default=[],
                        help="drop the response for this id")
    parser.add_argument("--mangle-id", action="append", default=[],
                        help="emit a non-normalized probability vector for this id")
    args = parser.parse_args(argv)

    batch: list[dict] = []
    for line in sys.stdin:
        if line.strip() == "":
            _respond(batch, args)
            batch = []
            continue
        try:
            batch.append(json.loads(line))
        except ValueError:
            batch.append({"id": None, "error": "malformed request line"})
    if batch:
        _respond(batch, args)
    return 0


def _respond(batch: list[dict], args) -> None:
    for rec in batch:
        rid = rec.get("id")
        if rid is None:
            continue
        if rid in args.omit_id:
            continue
        if rid in args.mangle_id:
            out = {"id": rid, "probs": [0.9, 0.9, 0.9]}
        elif "text" not in rec:
            out = {"id": rid, "error": "missing text"}
        elif args.mode == "keyword":
            out = {"id": rid, "probs": list(heuristic_probs(rec["text"]))}
        else:
            out = {"id": rid, "probs": [1 / 3, 1 / 3, 1 / 3]}
        sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    sys.stdout.write("\n")
    sys.stdout.flush()


if __name__ == "__main__":
    raise SystemExit(main())
