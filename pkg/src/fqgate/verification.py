"""Genuine-attempt verification against a per-subject reference gallery.

A probe matches when its cosine similarity to the subject's reference is at
least ``similarity_threshold``. The gated condition first drops probes that
fail the box-area gate or score below ``quality_threshold``; the false
rejection rate is then taken over the probes that were actually compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classifiers import score_batch
from .core import Dataset, Embedding, FaceSample
from .errors import (
    DimensionMismatch,
    InvalidConfig,
    MissingEmbedding,
    MissingLandmarks,
    UnknownSubject,
    ZeroNormEmbedding,
)
from .geometry import ResolutionGateConfig, bbox_area, feature_matrix


class Gallery:
    """One reference embedding per subject."""

    def __init__(self, entries: Mapping[str, Embedding | Sequence[float] | np.ndarray]):
        self._entries: dict[str, Embedding] = {}
        for subject_id, emb in entries.items():
            emb = emb if isinstance(emb, Embedding) else Embedding(emb)
            emb.check()
            self._entries[str(subject_id)] = emb

    def __contains__(self, subject_id: str) -> bool:
        return subject_id in self._entries

    def __getitem__(self, subject_id: str) -> Embedding:
        try:
            return self._entries[subject_id]
        except KeyError:
            raise UnknownSubject(f"subject {subject_id!r} has no gallery reference") from None

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def subject_ids(self) -> list[str]:
        return list(self._entries)


@dataclass(frozen=True)
class VerificationConfig:
    similarity_threshold: float = 0.5
    quality_threshold: float = 0.5
    gate: ResolutionGateConfig = field(default_factory=ResolutionGateConfig)

    def __post_init__(self):
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise InvalidConfig(f"similarity_threshold must be in [-1, 1], got {self.similarity_threshold}")
        if not 0.0 <= self.quality_threshold <= 1.0:
            raise InvalidConfig(f"quality_threshold must be in [0, 1], got {self.quality_threshold}")


@dataclass(frozen=True)
class VerificationReport:
    condition: str  # "baseline" or "gated"
    n_attempts: int
    n_rejected: int
    frr: float | None
    mean_similarity: float | None
    std_similarity: float | None
    n_filtered_out: int | None = None
    similarity_threshold: float = 0.5

    def to_dict(self) -> dict:
        d = {
            "condition": self.condition,
            "n_attempts": self.n_attempts,
            "n_rejected": self.n_rejected,
            "frr": self.frr,
            "frr_percent": None if self.frr is None else round(100.0 * self.frr, 2),
            "mean_similarity": self.mean_similarity,
            "std_similarity": self.std_similarity,
            "std_kind": "population",
            "similarity_threshold": self.similarity_threshold,
        }
        if self.n_filtered_out is not None:
            d["n_filtered_out"] = self.n_filtered_out
        return d


def cosine_similarity(e1: Embedding | np.ndarray, e2: Embedding | np.ndarray) -> float:
    a = e1.vector if isinstance(e1, Embedding) else np.asarray(e1, dtype=np.float64)
    b = e2.vector if isinstance(e2, Embedding) else np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"embedding dimensions differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormEmbedding("cosine similarity is undefined for a zero-norm embedding")
    return min(1.0, max(-1.0, float(a @ b) / (na * nb)))


def verify_pair(ref: Embedding, probe: Embedding, cfg: VerificationConfig = VerificationConfig()) -> tuple[float, bool]:
    """Return ``(similarity, is_match)``; the threshold itself counts as a match."""
    sim = cosine_similarity(ref, probe)
    return sim, sim >= cfg.similarity_threshold


@dataclass(frozen=True)
class GateDecision:
    sample_id: str
    bbox_area: float
    score: float | None  # None when the resolution gate already rejected the sample
    passed: bool


def quality_gate(model, samples: Sequence[FaceSample], cfg: VerificationConfig) -> list[GateDecision]:
    """Apply the resolution gate, then the quality threshold, to each sample.

    Samples below the area threshold are not scored.
    """
    for s in samples:
        if not s.has_landmarks:
            raise MissingLandmarks(f"sample {s.sample_id!r} has no keypoints/bbox")
    X = feature_matrix(samples)
    areas = [bbox_area(s.bbox) for s in samples]
    area_ok = np.array([a >= cfg.gate.min_bbox_area for a in areas], dtype=bool)
    scores = np.full(len(samples), np.nan)
    if area_ok.any():
        scores[area_ok] = score_batch(model, X[area_ok])
    decisions = []
    for i, s in enumerate(samples):
        if area_ok[i]:
            sc = float(scores[i])
            decisions.append(GateDecision(s.sample_id, areas[i], sc, sc >= cfg.quality_threshold))
        else:
            decisions.append(GateDecision(s.sample_id, areas[i], None, False))
    return decisions


def summarize(similarities: Sequence[float], threshold: float, condition: str,
              n_filtered_out: int | None = None) -> VerificationReport:
    """Aggregate similarities into a report.

    Sums use ``math.fsum`` so results do not depend on probe order.
    """
    n = len(similarities)
    n_rejected = sum(1 for s in similarities if not s >= threshold)
    if n:
        mean = math.fsum(similarities) / n
        std = math.sqrt(math.fsum((s - mean) ** 2 for s in similarities) / n)
        frr = n_rejected / n
    else:
        mean = std = frr = None
    return VerificationReport(condition, n, n_rejected, frr, mean, std, n_filtered_out, threshold)


def _check_probes(gallery: Gallery, probes: Sequence[FaceSample], gated: bool) -> None:
    for s in probes:
        if s.subject_id not in gallery:
            raise UnknownSubject(f"probe {s.sample_id!r}: subject {s.subject_id!r} not in gallery")
        if s.embedding is None:
            raise MissingEmbedding(f"probe {s.sample_id!r} has no embedding")
        if gated and not s.has_landmarks:
            raise MissingLandmarks(f"probe {s.sample_id!r} has no keypoints/bbox")


def probe_similarities(gallery: Gallery, probes: Sequence[FaceSample]) -> list[float]:
    return [cosine_similarity(gallery[s.subject_id], s.embedding) for s in probes]


def run_experiment(gallery: Gallery, probes: Dataset, model=None,
                   cfg: VerificationConfig = VerificationConfig()) -> VerificationReport:
    """Compare every probe with its subject's reference.

    Without ``model`` this is the baseline condition. With ``model``, probes
    failing the quality gate are excluded and counted in ``n_filtered_out``.
    """
    samples = list(probes.samples)
    _check_probes(gallery, samples, gated=model is not None)
    if model is None:
        return summarize(probe_similarities(gallery, samples), cfg.similarity_threshold, "baseline")
    decisions = quality_gate(model, samples, cfg)
    kept = [s for s, d in zip(samples, decisions) if d.passed]
    return summarize(
        probe_similarities(gallery, kept),
        cfg.similarity_threshold,
        "gated",
        n_filtered_out=len(samples) - len(kept),
    )
