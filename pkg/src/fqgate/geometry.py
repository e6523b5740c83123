"""Landmark normalization against the detection box, and the box-area resolution gate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import NUM_KEYPOINTS, BoundingBox, FaceSample, KeyPointSet
from .errors import DegenerateBox, InvalidConfig, MissingLandmarks

FEATURE_ORDER: tuple[str, ...] = tuple(
    f"{name}_{axis}"
    for name in ("left_eye", "right_eye", "nose_tip", "left_mouth_corner", "right_mouth_corner")
    for axis in ("x", "y")
)
NUM_FEATURES = len(FEATURE_ORDER)
DEFAULT_MIN_BBOX_AREA = 64.0 * 64.0


@dataclass(frozen=True)
class ResolutionGateConfig:
    min_bbox_area: float = DEFAULT_MIN_BBOX_AREA

    def __post_init__(self):
        # 0 is accepted as the documented "gate disabled" setting
        if not self.min_bbox_area >= 0:
            raise InvalidConfig(f"min_bbox_area must be >= 0, got {self.min_bbox_area}")


def _extent(box: BoundingBox) -> tuple[float, float]:
    w = box.x_max - box.x_min
    h = box.y_max - box.y_min
    if not (w > 0 and h > 0):
        raise DegenerateBox(f"bounding box {box.as_tuple()} has non-positive extent")
    return w, h


def normalize_keypoints(kp: KeyPointSet, box: BoundingBox) -> tuple[tuple[float, float], ...]:
    """Map each keypoint into box-relative coordinates.

    ``x' = (x - x_min) / (x_max - x_min)`` and likewise for y, so points on
    the box border land exactly on 0 or 1.
    """
    w, h = _extent(box)
    return tuple(((x - box.x_min) / w, (y - box.y_min) / h) for x, y in kp.points)


def extract_features(kp: KeyPointSet, box: BoundingBox) -> np.ndarray:
    """Return the 10-value feature vector ``[x'1, y'1, ..., x'5, y'5]``."""
    return np.array([c for p in normalize_keypoints(kp, box) for c in p], dtype=np.float64)


def features_from_arrays(points: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Vectorized :func:`extract_features`.

    Args:
        points: ``(n, 5, 2)`` keypoint coordinates.
        boxes: ``(n, 4)`` rows of ``x_min, y_min, x_max, y_max``.

    Returns:
        ``(n, 10)`` feature matrix.
    """
    points = np.asarray(points, dtype=np.float64)
    boxes = np.asarray(boxes, dtype=np.float64)
    lo = boxes[:, None, :2]
    ext = boxes[:, None, 2:] - lo
    if np.any(ext <= 0):
        bad = int(np.flatnonzero(np.any(ext[:, 0, :] <= 0, axis=1))[0])
        raise DegenerateBox(f"bounding box {tuple(boxes[bad])} has non-positive extent")
    return ((points - lo) / ext).reshape(len(points), 2 * NUM_KEYPOINTS)


def feature_matrix(samples: Sequence[FaceSample]) -> np.ndarray:
    """Stack feature vectors for ``samples``; every sample needs keypoints and a box."""
    if not samples:
        return np.empty((0, NUM_FEATURES))
    for s in samples:
        if not s.has_landmarks:
            raise MissingLandmarks(f"sample {s.sample_id!r} has no keypoints/bbox")
    points = np.array([s.keypoints.points for s in samples], dtype=np.float64)
    boxes = np.array([s.bbox.as_tuple() for s in samples], dtype=np.float64)
    return features_from_arrays(points, boxes)


def bbox_area(box: BoundingBox) -> float:
    w, h = _extent(box)
    return w * h


def resolution_gate(box: BoundingBox, cfg: ResolutionGateConfig = ResolutionGateConfig()) -> bool:
    """True when the box area reaches ``cfg.min_bbox_area`` (inclusive)."""
    return bbox_area(box) >= cfg.min_bbox_area
