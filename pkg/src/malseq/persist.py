"""Versioned JSON documents for trained models.

Layout (one document per model)::

    {"format": "malseq-model", "version": 1, "kind": "<knn|svm|rf|gbt|cnn|rnn>",
     "hyperparameters": {...}, "parameters": {...}}

Floats are written with ``repr`` precision, so ``load(save(m))`` scores
bit-for-bit like ``m``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .classic import GbtModel, KnnModel, LinearSvmModel, RandomForestModel
from .errors import SchemaMismatch
from .neural import CnnModel, RnnModel

FORMAT = "malseq-model"
VERSION = 1
KINDS = {cls.kind: cls for cls in (KnnModel, LinearSvmModel, RandomForestModel, GbtModel, CnnModel, RnnModel)}


def model_to_document(model) -> dict:
    return {"format": FORMAT, "version": VERSION, "kind": model.kind, **model.to_dict()}


def model_from_document(doc: dict):
    if doc.get("format") != FORMAT:
        raise SchemaMismatch(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise SchemaMismatch(f"unsupported model document version {doc.get('version')!r}")
    try:
        cls = KINDS[doc["kind"]]
    except KeyError:
        raise SchemaMismatch(f"unknown model kind {doc.get('kind')!r}") from None
    return cls.from_dict(doc)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model, path) -> None:
    atomic_write_text(path, json.dumps(model_to_document(model), sort_keys=True) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_document(json.load(fh))
