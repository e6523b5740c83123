"""Versioned JSON model files.

Arrays are written as ``{"dtype", "shape", "data"}`` objects with ``data``
flattened. Floats use Python's shortest round-trip repr, so a loaded model
scores bit-identically to the saved one.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import CorruptModelFile, FormatVersionMismatch
from .base import Family, TrainedModel, _family_module

FORMAT_VERSION = 1


def _encode(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        kind = "float64" if obj.dtype.kind == "f" else "int64"
        return {"dtype": kind, "shape": list(obj.shape), "data": obj.astype(kind).ravel().tolist()}
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj: Any) -> Any:
    if isinstance(obj, dict):
        if set(obj) == {"dtype", "shape", "data"}:
            if obj["dtype"] not in ("float64", "int64"):
                raise ValueError(f"unsupported array dtype {obj['dtype']!r}")
            return np.array(obj["data"], dtype=obj["dtype"]).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "family": model.family.value,
        "feature_order": list(model.feature_order),
        "hyperparameters": _encode(model.hyperparameters),
        "parameters": _encode(model.parameters),
        "train_meta": _encode(model.train_meta),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptModelFile("model document has no format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"model format_version {doc['format_version']!r} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        family = Family(doc["family"])
        feature_order = tuple(doc["feature_order"])
        if not all(isinstance(f, str) for f in feature_order):
            raise TypeError("feature_order must be a list of strings")
        params = _decode(doc["parameters"])
        model = TrainedModel(
            family=family,
            feature_order=feature_order,
            hyperparameters=_decode(doc["hyperparameters"]),
            parameters=params,
            train_meta=_decode(doc["train_meta"]),
        )
        _family_module(family).check_state(params)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptModelFile(f"invalid model document: {exc}") from exc
    return model


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), indent=1, allow_nan=False) + "\n"


def save_model(model: TrainedModel, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | os.PathLike) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModelFile(f"{path}: cannot parse model file: {exc}") from exc
    return model_from_dict(doc)
