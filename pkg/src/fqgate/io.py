"""Dataset (JSON Lines), gallery and report file formats.

Dataset line::

    {"sample_id": str, "subject_id": str,
     "keypoints": [[x, y] x 5], "bbox": [x_min, y_min, x_max, y_max],
     "label": "high" | "low", "embedding": [float, ...], "ext": {...}}

``label``, ``embedding`` and ``ext`` are optional. ``keypoints`` and
``bbox`` may be omitted together for probe-only records. Producer-specific
data belongs under ``ext``; other unknown keys are warned about and ignored.
"""

from __future__ import annotations

import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Iterator

from .core import BoundingBox, Dataset, Embedding, FaceSample, KeyPointSet, QualityLabel, validate_sample
from .errors import FQGateError, SchemaError, ValidationError
from .verification import Gallery

logger = logging.getLogger(__name__)

SAMPLE_FIELDS = ("sample_id", "subject_id", "keypoints", "bbox", "label", "embedding", "ext")


def _number(v: Any, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{what} must be a number, got {v!r}")
    return float(v)


def _parse_sample(data: Any) -> FaceSample:
    if not isinstance(data, dict):
        raise SchemaError("each line must be a JSON object")

    for key in ("sample_id", "subject_id"):
        if not isinstance(data.get(key), str) or not data[key]:
            raise SchemaError(f"'{key}' must be a non-empty string")

    kp_raw, box_raw = data.get("keypoints"), data.get("bbox")
    if (kp_raw is None) != (box_raw is None):
        raise SchemaError("'keypoints' and 'bbox' must be given together")
    keypoints = bbox = None
    if kp_raw is not None:
        if not isinstance(kp_raw, list) or len(kp_raw) != 5:
            raise SchemaError("'keypoints' must be a list of 5 [x, y] pairs")
        pts = []
        for p in kp_raw:
            if not isinstance(p, list) or len(p) != 2:
                raise SchemaError("'keypoints' must be a list of 5 [x, y] pairs")
            pts.append((_number(p[0], "keypoint"), _number(p[1], "keypoint")))
        keypoints = KeyPointSet(tuple(pts))
        if not isinstance(box_raw, list) or len(box_raw) != 4:
            raise SchemaError("'bbox' must be [x_min, y_min, x_max, y_max]")
        bbox = BoundingBox(*(_number(v, "bbox") for v in box_raw))

    label = None
    if data.get("label") is not None:
        try:
            label = QualityLabel.parse(data["label"])
        except ValueError as exc:
            raise SchemaError(str(exc)) from None

    embedding = None
    if data.get("embedding") is not None:
        raw = data["embedding"]
        if not isinstance(raw, list) or len(raw) < 2:
            raise SchemaError("'embedding' must be a list of at least 2 numbers")
        embedding = Embedding([_number(v, "embedding") for v in raw])

    ext = data.get("ext") or {}
    if not isinstance(ext, dict):
        raise SchemaError("'ext' must be an object")

    return FaceSample(data["sample_id"], data["subject_id"], keypoints, bbox, label, embedding, ext)


def iter_samples(path: str | os.PathLike) -> Iterator[FaceSample]:
    """Stream validated samples from a JSONL file.

    Raises:
        SchemaError: malformed line (carries the line number).
        ValidationError: a well-formed record breaks an invariant; the
            message is prefixed with the line number.
    """
    warned: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line_no) from None
            if isinstance(data, dict):
                unknown = sorted(set(data) - set(SAMPLE_FIELDS) - warned)
                if unknown:
                    logger.warning("%s line %d: ignoring unknown fields %s (use 'ext' for extensions)",
                                   path, line_no, unknown)
                    warned.update(unknown)
            try:
                sample = _parse_sample(data)
                validate_sample(sample)
            except SchemaError as exc:
                raise SchemaError(str(exc), line_no) from None
            except (FQGateError, ValueError) as exc:
                err_type = type(exc) if isinstance(exc, FQGateError) else SchemaError
                raise err_type(f"line {line_no}: {exc}") from exc
            yield sample


def read_dataset(path: str | os.PathLike, name: str | None = None) -> Dataset:
    try:
        return Dataset(tuple(iter_samples(path)), name=name or Path(path).stem)
    except ValidationError as exc:
        # duplicate ids surface at Dataset construction
        raise type(exc)(f"{path}: {exc}") from exc


def sample_to_dict(s: FaceSample) -> dict:
    d: dict[str, Any] = {"sample_id": s.sample_id, "subject_id": s.subject_id}
    if s.keypoints is not None:
        d["keypoints"] = [list(p) for p in s.keypoints.points]
        d["bbox"] = list(s.bbox.as_tuple())
    if s.label is not None:
        d["label"] = s.label.value
    if s.embedding is not None:
        d["embedding"] = s.embedding.vector.tolist()
    if s.ext:
        d["ext"] = s.ext
    return d


def write_dataset(ds: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in ds.samples:
            fh.write(json.dumps(sample_to_dict(s), separators=(",", ":"), allow_nan=False))
            fh.write("\n")


def read_gallery(path: str | os.PathLike) -> Gallery:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("subjects"), dict):
        raise SchemaError(f"{path}: gallery must be an object with a 'subjects' mapping")
    entries = {}
    for subject_id, vec in doc["subjects"].items():
        if not isinstance(vec, list) or len(vec) < 2:
            raise SchemaError(f"{path}: subject {subject_id!r} needs a list of >= 2 numbers")
        entries[subject_id] = [_number(v, f"embedding of {subject_id!r}") for v in vec]
    return Gallery(entries)


def write_gallery(gallery: Gallery, path: str | os.PathLike) -> None:
    doc = {"subjects": {sid: emb.vector.tolist() for sid, emb in gallery.items()}}
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def _finite_or_none(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    return obj


def write_json(obj: Any, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(_finite_or_none(obj), indent=2, allow_nan=False) + "\n", encoding="utf-8")
