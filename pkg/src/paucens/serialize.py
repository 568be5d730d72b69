"""JSON model files and JSON-lines training logs.

Floats are written by :mod:`json`, which uses the shortest decimal that
reads back to the same double, so a saved model scores bit-identically.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .ensemble import EnsembleModel
from .errors import DataError

__all__ = ["MODEL_FORMAT", "MODEL_VERSION", "save_model", "load_model", "dumps_model", "loads_model", "write_log"]

MODEL_FORMAT = "paucens-model"
MODEL_VERSION = 1


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    return value


def dumps_model(model: EnsembleModel) -> str:
    doc = {"format": MODEL_FORMAT, "version": MODEL_VERSION}
    doc.update(model.to_dict())
    return json.dumps(_plain(doc), indent=1, sort_keys=True) + "\n"


def loads_model(text: str) -> EnsembleModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise DataError("not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {doc.get('version')!r}")
    try:
        return EnsembleModel.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"corrupt model file: {exc}") from None


def save_model(model: EnsembleModel, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> EnsembleModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from None
    return loads_model(text)


def write_log(records, path) -> None:
    """One JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_plain(rec), sort_keys=True) + "\n")
