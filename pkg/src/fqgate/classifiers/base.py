"""Uniform train/score interface over the five classifier families."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping, Sequence

import numpy as np

from ..core import Dataset, QualityLabel
from ..errors import (
    ConvergenceWarning,
    FeatureOrderMismatch,
    InvalidConfig,
    SingleClassTrainingSet,
    TooFewSamples,
    UnlabeledSample,
)
from ..geometry import FEATURE_ORDER, feature_matrix

DEFAULT_THRESHOLD = 0.5


class Family(enum.Enum):
    LOGREG = "logreg"
    KNN = "knn"
    SVC = "svc"
    RANDOM_FOREST = "rf"
    MLP = "mlp"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"random_forest": "rf", "randomforest": "rf", "logistic_regression": "logreg"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            choices = ", ".join(f.value for f in cls)
            raise InvalidConfig(f"unknown classifier family {value!r}; choose from {choices}") from None


# None means "derive from the data" (documented per family)
DEFAULT_PARAMS: dict[Family, dict[str, Any]] = {
    Family.LOGREG: {"learning_rate": 0.1, "max_iter": 5000, "tol": 1e-6, "l2": 1e-4},
    Family.KNN: {"k": 5},
    Family.SVC: {"C": 1.0, "gamma": None, "tol": 1e-3, "max_iter": None, "standardize": True},
    Family.RANDOM_FOREST: {
        "n_trees": 100,
        "max_features": None,
        "min_samples_split": 2,
        "max_depth": None,
        "bootstrap": True,
    },
    Family.MLP: {"hidden": [16, 8], "learning_rate": 0.05, "epochs": 2000, "init_scale": 0.5},
}


@dataclass(frozen=True)
class TrainConfig:
    family: Family
    seed: int = 0
    family_params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        unknown = sorted(set(self.family_params) - set(DEFAULT_PARAMS[family]))
        if unknown:
            raise InvalidConfig(f"parameters {unknown} do not apply to family {family.value!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "family_params", MappingProxyType(dict(self.family_params)))

    def resolved_params(self) -> dict[str, Any]:
        params = dict(DEFAULT_PARAMS[self.family])
        params.update(self.family_params)
        return params


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted classifier.

    ``parameters`` holds the learned state as numpy arrays (RandomForest keeps
    a list of per-tree array dicts). ``hyperparameters`` holds the fully
    resolved training settings.
    """

    family: Family
    feature_order: tuple[str, ...]
    hyperparameters: dict[str, Any]
    parameters: dict[str, Any]
    train_meta: dict[str, Any]

    @property
    def converged(self) -> bool:
        return bool(self.train_meta.get("converged", True))


@dataclass(frozen=True)
class QualityScore:
    value: float
    label: QualityLabel


def label_for(value: float, threshold: float = DEFAULT_THRESHOLD) -> QualityLabel:
    return QualityLabel.HIGH if value >= threshold else QualityLabel.LOW


def labels_to_targets(ds: Dataset) -> np.ndarray:
    """1 for High, 0 for Low; raises on unlabeled samples."""
    y = np.empty(len(ds), dtype=np.int64)
    for i, s in enumerate(ds.samples):
        if s.label is None:
            raise UnlabeledSample(f"sample {s.sample_id!r} has no quality label")
        y[i] = 1 if s.label is QualityLabel.HIGH else 0
    return y


def _family_module(family: Family):
    from . import forest, knn, logreg, mlp, svc

    return {
        Family.LOGREG: logreg,
        Family.KNN: knn,
        Family.SVC: svc,
        Family.RANDOM_FOREST: forest,
        Family.MLP: mlp,
    }[family]


def fit_arrays(X: np.ndarray, y: np.ndarray, cfg: TrainConfig, timestamp: str | None = None) -> TrainedModel:
    """Train on a prepared ``(n, 10)`` feature matrix and 0/1 targets."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    if n == 0:
        raise TooFewSamples("training set is empty")
    if X.shape != (n, len(FEATURE_ORDER)):
        raise FeatureOrderMismatch(f"expected ({n}, {len(FEATURE_ORDER)}) features, got {X.shape}")
    n_high = int(y.sum())
    family = cfg.family
    params = cfg.resolved_params()
    if family in (Family.LOGREG, Family.SVC, Family.MLP) and n_high in (0, n):
        raise SingleClassTrainingSet(f"{family.value} needs both High and Low samples")
    if family is Family.KNN and n < params["k"]:
        raise TooFewSamples(f"knn with k={params['k']} needs >= k samples, got {n}")

    module = _family_module(family)
    rng = np.random.default_rng(int(cfg.seed))
    state, info = module.fit(X, y, params, rng, seed=int(cfg.seed))
    meta = {
        "seed": int(cfg.seed),
        "n_samples": n,
        "n_high": n_high,
        "n_low": n - n_high,
        "timestamp": timestamp,
        **info,
    }
    if not meta.get("converged", True):
        warnings.warn(
            f"{family.value} training stopped at its iteration cap; returning best-so-far model",
            ConvergenceWarning,
            stacklevel=2,
        )
    return TrainedModel(family, FEATURE_ORDER, params, state, meta)


def train(train_set: Dataset, cfg: TrainConfig, timestamp: str | None = None) -> TrainedModel:
    """Fit ``cfg.family`` on the labeled samples of ``train_set``.

    Identical inputs give identical parameters. Models whose optimizer hits
    its iteration cap are still returned, with ``train_meta['converged']``
    set to False and a :class:`ConvergenceWarning` emitted.
    """
    y = labels_to_targets(train_set)
    X = feature_matrix(train_set.samples)
    return fit_arrays(X, y, cfg, timestamp=timestamp)


def _check_order(model: TrainedModel, feature_order: Sequence[str]) -> None:
    if tuple(feature_order) != tuple(model.feature_order):
        raise FeatureOrderMismatch(
            f"model expects feature order {list(model.feature_order)}, got {list(feature_order)}"
        )


def score_batch(
    model: TrainedModel, X: np.ndarray, feature_order: Sequence[str] = FEATURE_ORDER
) -> np.ndarray:
    """Quality scores in [0, 1] for each row of ``X``."""
    _check_order(model, feature_order)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.feature_order):
        raise FeatureOrderMismatch(
            f"expected rows of {len(model.feature_order)} features, got shape {X.shape}"
        )
    scores = _family_module(model.family).predict_proba(model.parameters, model.hyperparameters, X)
    return np.clip(scores, 0.0, 1.0)


def score(
    model: TrainedModel,
    fv: Sequence[float] | np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
    feature_order: Sequence[str] = FEATURE_ORDER,
) -> QualityScore:
    value = float(score_batch(model, np.asarray(fv, dtype=np.float64).reshape(1, -1), feature_order)[0])
    return QualityScore(value, label_for(value, threshold))


def sigmoid(z):
    # tanh form avoids overflow warnings for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def log1pexp(z):
    """Stable ``log(1 + exp(z))``."""
    return np.logaddexp(0.0, z)


def is_finite_tree(obj) -> bool:
    if isinstance(obj, np.ndarray):
        return obj.dtype.kind not in "fc" or bool(np.all(np.isfinite(obj)))
    if isinstance(obj, dict):
        return all(is_finite_tree(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(is_finite_tree(v) for v in obj)
    if isinstance(obj, float):
        return math.isfinite(obj)
    return True
