"""Seeded generator for a pose/resolution face-quality benchmark.

Faces are a rigid five-point 3D template rotated by (yaw, pitch, roll),
orthographically projected and scaled to a target inter-eye distance. Each
image gets a ground-truth quality label from its pose and box area, and a
probe embedding whose noise grows with pose deviation and resolution
deficit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import (
    BoundingBox,
    Dataset,
    Embedding,
    FaceSample,
    KeyPointSet,
    QualityLabel,
)
from .errors import InvalidConfig
from .geometry import bbox_area
from .verification import Gallery

# left_eye, right_eye, nose_tip, left_mouth, right_mouth; x right, y down, z toward camera
FACE_TEMPLATE = np.array(
    [
        [-0.30, -0.25, 0.00],
        [0.30, -0.25, 0.00],
        [0.00, 0.05, 0.25],
        [-0.20, 0.35, 0.05],
        [0.20, 0.35, 0.05],
    ]
)
TEMPLATE_EYE_DISTANCE = 0.6
BBOX_MARGIN = 0.25


def rotation_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """``R_roll @ R_pitch @ R_yaw`` for angles in degrees."""
    y, p, r = np.radians([yaw, pitch, roll])
    r_yaw = np.array([[np.cos(y), 0.0, np.sin(y)], [0.0, 1.0, 0.0], [-np.sin(y), 0.0, np.cos(y)]])
    r_pitch = np.array([[1.0, 0.0, 0.0], [0.0, np.cos(p), -np.sin(p)], [0.0, np.sin(p), np.cos(p)]])
    r_roll = np.array([[np.cos(r), -np.sin(r), 0.0], [np.sin(r), np.cos(r), 0.0], [0.0, 0.0, 1.0]])
    return r_roll @ r_pitch @ r_yaw


def project_pose(
    yaw: float,
    pitch: float,
    roll: float,
    scale: float,
    center: tuple[float, float] = (0.0, 0.0),
    template: np.ndarray = FACE_TEMPLATE,
) -> tuple[np.ndarray, tuple[float, float, float, float]]:
    """Project the rotated template into the image plane.

    Args:
        yaw, pitch, roll: head rotation in degrees.
        scale: inter-eye distance in pixels for a frontal face.
        center: pixel position of the template origin.

    Returns:
        ``(points, box)``: a ``(5, 2)`` array of pixel coordinates and the
        axis-aligned extent of those points grown by 25% per side.
    """
    if not scale > 0:
        raise InvalidConfig(f"scale must be positive, got {scale}")
    rotated = template @ rotation_matrix(yaw, pitch, roll).T
    px_per_unit = scale / TEMPLATE_EYE_DISTANCE
    points = rotated[:, :2] * px_per_unit + np.asarray(center, dtype=np.float64)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    margin = BBOX_MARGIN * (hi - lo)
    box = (lo[0] - margin[0], lo[1] - margin[1], hi[0] + margin[0], hi[1] + margin[1])
    return points, tuple(float(v) for v in box)


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters.

    Angles are in degrees and scales are inter-eye distances in pixels. Yaw
    and pitch follow zero-mean normals (``*_spread`` standard deviation)
    truncated to ``+-*_range``. Scale is ``scale_min + (scale_max -
    scale_min) * Beta(*scale_beta)``, skewed toward larger faces because
    detectors miss many small ones. Embedding noise has standard deviation
    ``base_sigma + pose_sigma_gain * pose_dev + scale_sigma_gain *
    res_deficit``, with both deficits in [0, 1].
    """

    n_subjects: int = 600
    images_per_subject: int = 10
    yaw_range: float = 75.0
    pitch_range: float = 40.0
    roll_range: float = 5.0
    yaw_spread: float = 30.0
    pitch_spread: float = 20.0
    scale_min: float = 12.0
    scale_max: float = 120.0
    scale_beta: tuple[float, float] = (4.0, 1.2)
    landmark_noise: float = 0.01  # fraction of bbox width
    hq_max_yaw: float = 25.0
    hq_max_pitch: float = 15.0
    hq_min_area: float = 4096.0
    embedding_dim: int = 512
    base_sigma: float = 0.05
    pose_sigma_gain: float = 2.0
    scale_sigma_gain: float = 1.0
    frame_size: tuple[float, float] = (1920.0, 1080.0)
    seed: int = 7

    def __post_init__(self):
        object.__setattr__(self, "scale_beta", tuple(float(v) for v in self.scale_beta))
        object.__setattr__(self, "frame_size", tuple(float(v) for v in self.frame_size))
        problems = []
        if self.n_subjects < 1:
            problems.append("n_subjects must be >= 1")
        if self.images_per_subject < 1:
            problems.append("images_per_subject must be >= 1")
        for name in ("yaw_range", "pitch_range", "roll_range"):
            if not 0 <= getattr(self, name) <= 90:
                problems.append(f"{name} must be in [0, 90]")
        for name in ("yaw_spread", "pitch_spread", "landmark_noise", "base_sigma",
                     "pose_sigma_gain", "scale_sigma_gain", "hq_min_area"):
            if not getattr(self, name) >= 0:
                problems.append(f"{name} must be >= 0")
        if not 0 < self.scale_min <= self.scale_max:
            problems.append("need 0 < scale_min <= scale_max")
        if len(self.scale_beta) != 2 or min(self.scale_beta) <= 0:
            problems.append("scale_beta must be two positive shape parameters")
        if self.embedding_dim < 2:
            problems.append("embedding_dim must be >= 2")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a 64-bit unsigned integer")
        if problems:
            raise InvalidConfig("; ".join(problems))

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfig(f"unknown synth config keys: {unknown}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scale_beta"] = list(self.scale_beta)
        d["frame_size"] = list(self.frame_size)
        return d


def is_high_quality(yaw: float, pitch: float, area: float, cfg: SynthConfig) -> bool:
    return abs(yaw) <= cfg.hq_max_yaw and abs(pitch) <= cfg.hq_max_pitch and area >= cfg.hq_min_area


def noise_sigma(yaw: float, pitch: float, scale: float, cfg: SynthConfig) -> float:
    """Embedding noise level for a capture with the given pose and scale."""
    pose_dev = max(
        abs(yaw) / cfg.yaw_range if cfg.yaw_range > 0 else 0.0,
        abs(pitch) / cfg.pitch_range if cfg.pitch_range > 0 else 0.0,
    )
    span = cfg.scale_max - cfg.scale_min
    deficit = (cfg.scale_max - scale) / span if span > 0 else 0.0
    deficit = min(max(deficit, 0.0), 1.0)
    return cfg.base_sigma + cfg.pose_sigma_gain * min(pose_dev, 1.0) + cfg.scale_sigma_gain * deficit


def degrade_embedding(reference: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-normalized ``reference + sigma * n`` with ``n ~ N(0, I / dim)``.

    Scaling the noise by ``1 / sqrt(dim)`` keeps its expected norm at one so
    ``sigma`` means the same thing at every embedding dimension.
    """
    dim = reference.shape[0]
    probe = reference + sigma * rng.standard_normal(dim) / math.sqrt(dim)
    return probe / np.linalg.norm(probe)


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _truncated_normal(rng: np.random.Generator, spread: float, limit: float) -> float:
    if spread == 0 or limit == 0:
        return 0.0
    while True:
        v = rng.normal(0.0, spread)
        if abs(v) <= limit:
            return float(v)


def _subject_rng(seed: int, subject_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, subject_index])


def _generate_subject(cfg: SynthConfig, subject_index: int):
    rng = _subject_rng(cfg.seed, subject_index)
    subject_id = f"subject_{subject_index:04d}"
    reference = random_unit_vector(cfg.embedding_dim, rng)
    samples = []
    for image_index in range(cfg.images_per_subject):
        yaw = _truncated_normal(rng, cfg.yaw_spread, cfg.yaw_range)
        pitch = _truncated_normal(rng, cfg.pitch_spread, cfg.pitch_range)
        roll = float(rng.uniform(-cfg.roll_range, cfg.roll_range))
        a, b = cfg.scale_beta
        scale = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * float(rng.beta(a, b))
        center = (
            float(rng.uniform(0.25, 0.75) * cfg.frame_size[0]),
            float(rng.uniform(0.25, 0.75) * cfg.frame_size[1]),
        )
        points, box_t = project_pose(yaw, pitch, roll, scale, center)
        box = BoundingBox(*box_t)
        points = points + rng.normal(0.0, cfg.landmark_noise * box.width, points.shape)
        # a detector never reports landmarks outside its own box
        points[:, 0] = np.clip(points[:, 0], box.x_min, box.x_max)
        points[:, 1] = np.clip(points[:, 1], box.y_min, box.y_max)

        area = bbox_area(box)
        sigma = noise_sigma(yaw, pitch, scale, cfg)
        label = QualityLabel.HIGH if is_high_quality(yaw, pitch, area, cfg) else QualityLabel.LOW
        probe = degrade_embedding(reference, sigma, rng)
        samples.append(
            FaceSample(
                sample_id=f"{subject_id}_img_{image_index:03d}",
                subject_id=subject_id,
                keypoints=KeyPointSet(tuple(map(tuple, points.tolist()))),
                bbox=box,
                label=label,
                embedding=Embedding(probe),
                ext={"synth": {"yaw": yaw, "pitch": pitch, "roll": roll, "scale": scale, "sigma": sigma}},
            )
        )
    return subject_id, reference, samples


def generate(cfg: SynthConfig = SynthConfig()):
    """Generate the labeled dataset and its reference gallery.

    Each subject draws from its own generator seeded by ``(cfg.seed,
    subject_index)``, so output does not depend on generation order.

    Returns:
        ``(dataset, gallery)``.
    """
    samples: list[FaceSample] = []
    references: dict[str, Embedding] = {}
    for i in range(cfg.n_subjects):
        subject_id, reference, subject_samples = _generate_subject(cfg, i)
        references[subject_id] = Embedding(reference)
        samples.extend(subject_samples)
    return Dataset(tuple(samples), name=f"synthetic-seed{cfg.seed}"), Gallery(references)
