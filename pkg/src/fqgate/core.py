"""Data model, sample validation and deterministic train/test splitting."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateBox,
    DuplicateSampleId,
    InvalidConfig,
    KeypointOutsideBox,
    NonFiniteValue,
    TooFewSamples,
    ZeroNormEmbedding,
)

KEYPOINT_NAMES = (
    "left_eye",
    "right_eye",
    "nose_tip",
    "left_mouth_corner",
    "right_mouth_corner",
)
NUM_KEYPOINTS = len(KEYPOINT_NAMES)
DEFAULT_EMBEDDING_DIM = 512


class QualityLabel(enum.Enum):
    HIGH = "high"
    LOW = "low"

    @classmethod
    def parse(cls, value: str) -> "QualityLabel":
        try:
            return cls(value.lower())
        except (ValueError, AttributeError):
            raise ValueError(f"label must be 'high' or 'low', got {value!r}") from None

    @property
    def is_high(self) -> bool:
        return self is QualityLabel.HIGH


def _check_finite(values: Iterable[float], what: str) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NonFiniteValue(f"{what} contains non-finite value {v!r}")


@dataclass(frozen=True)
class KeyPointSet:
    """Five (x, y) landmarks in pixel units, in ``KEYPOINT_NAMES`` order."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) != NUM_KEYPOINTS:
            raise ValueError(f"expected {NUM_KEYPOINTS} keypoints, got {len(pts)}")
        object.__setattr__(self, "points", pts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def check(self) -> None:
        """Raise :class:`DegenerateBox` unless both extents are strictly positive."""
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DegenerateBox(f"bounding box {self.as_tuple()} has non-positive extent")


class Embedding:
    """Immutable face embedding vector of dimension >= 2."""

    __slots__ = ("_vector",)

    def __init__(self, vector: Sequence[float] | np.ndarray):
        arr = np.array(vector, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        self._vector = arr

    @property
    def vector(self) -> np.ndarray:
        return self._vector

    @property
    def dim(self) -> int:
        return self._vector.shape[0]

    def check(self) -> None:
        if self.dim < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {self.dim}")
        if not np.all(np.isfinite(self._vector)):
            raise NonFiniteValue("embedding contains non-finite values")
        if not np.linalg.norm(self._vector) > 0:
            raise ZeroNormEmbedding("embedding has zero norm")

    def __eq__(self, other):
        if not isinstance(other, Embedding):
            return NotImplemented
        return np.array_equal(self._vector, other._vector)

    def __hash__(self):
        return hash(self._vector.tobytes())

    def __repr__(self):
        return f"Embedding(dim={self.dim})"


@dataclass(frozen=True)
class FaceSample:
    sample_id: str
    subject_id: str
    keypoints: KeyPointSet | None
    bbox: BoundingBox | None
    label: QualityLabel | None = None
    embedding: Embedding | None = None
    ext: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def has_landmarks(self) -> bool:
        return self.keypoints is not None and self.bbox is not None


def validate_sample(sample: FaceSample) -> FaceSample:
    """Check every invariant of ``sample`` and return it unchanged.

    Checks run in a fixed order (non-finite values, box extent, keypoint
    containment, embedding) so that a bad sample raises exactly one error.
    Keypoints on the box border are valid.
    """
    if sample.bbox is not None:
        _check_finite(sample.bbox.as_tuple(), "bbox")
    if sample.keypoints is not None:
        _check_finite((c for p in sample.keypoints.points for c in p), "keypoints")
    if sample.embedding is not None and not np.all(np.isfinite(sample.embedding.vector)):
        raise NonFiniteValue("embedding contains non-finite values")

    if sample.bbox is not None:
        sample.bbox.check()
        if sample.keypoints is not None:
            b = sample.bbox
            for name, (x, y) in zip(KEYPOINT_NAMES, sample.keypoints.points):
                if not (b.x_min <= x <= b.x_max and b.y_min <= y <= b.y_max):
                    raise KeypointOutsideBox(
                        f"{sample.sample_id}: {name} ({x}, {y}) outside bbox {b.as_tuple()}"
                    )
    if sample.embedding is not None:
        sample.embedding.check()
    return sample


@dataclass(frozen=True)
class Dataset:
    samples: tuple[FaceSample, ...]
    name: str = "dataset"

    def __post_init__(self):
        samples = tuple(self.samples)
        seen: set[str] = set()
        for s in samples:
            if s.sample_id in seen:
                raise DuplicateSampleId(f"duplicate sample_id {s.sample_id!r}")
            seen.add(s.sample_id)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def subset(self, indices: Iterable[int], name: str | None = None) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices), name or self.name)

    def label_counts(self) -> dict[QualityLabel | None, int]:
        counts: dict[QualityLabel | None, int] = {}
        for s in self.samples:
            counts[s.label] = counts.get(s.label, 0) + 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _apportion(sizes: Sequence[int], fraction: float, total: int) -> list[int]:
    """Largest-remainder split of ``total`` across strata proportional to ``sizes``."""
    exact = [fraction * n for n in sizes]
    counts = [int(math.floor(e)) for e in exact]
    remaining = total - sum(counts)
    order = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remaining]:
        counts[i] += 1
    return counts


_STRATUM_ORDER = {QualityLabel.HIGH: 0, QualityLabel.LOW: 1, None: 2}


def split_dataset(ds: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    """Partition ``ds`` into train and test sets.

    The train set has ``round(train_fraction * len(ds))`` samples. With
    stratification, each label stratum contributes within one sample of its
    proportional share. Both outputs keep the input ordering, and the result
    depends only on ``(ds, spec)``.
    """
    n = len(ds)
    n_train = _round_half_up(spec.train_fraction * n)
    rng = np.random.default_rng(spec.seed)

    if spec.stratified:
        strata: dict[QualityLabel | None, list[int]] = {}
        for i, s in enumerate(ds.samples):
            strata.setdefault(s.label, []).append(i)
        keys = sorted(strata, key=_STRATUM_ORDER.__getitem__)
        for k in keys:
            if len(strata[k]) < 2:
                name = k.value if k is not None else "unlabeled"
                raise TooFewSamples(f"class {name!r} has {len(strata[k])} sample(s); need >= 2")
        groups = [strata[k] for k in keys]
    else:
        if n < 2:
            raise TooFewSamples(f"need >= 2 samples to split, got {n}")
        groups = [list(range(n))]

    quotas = _apportion([len(g) for g in groups], spec.train_fraction, n_train)
    train_idx: list[int] = []
    for group, quota in zip(groups, quotas):
        perm = rng.permutation(len(group))
        train_idx.extend(group[j] for j in perm[:quota])

    chosen = set(train_idx)
    train = sorted(chosen)
    test = [i for i in range(n) if i not in chosen]
    return ds.subset(train, f"{ds.name}:train"), ds.subset(test, f"{ds.name}:test")
