"""Quality classifiers over normalized landmark features."""

from .base import (
    DEFAULT_PARAMS,
    DEFAULT_THRESHOLD,
    Family,
    QualityScore,
    TrainConfig,
    TrainedModel,
    fit_arrays,
    label_for,
    labels_to_targets,
    score,
    score_batch,
    train,
)
from .forest import gini_impurity
from .persistence import FORMAT_VERSION, load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "DEFAULT_PARAMS",
    "DEFAULT_THRESHOLD",
    "FORMAT_VERSION",
    "Family",
    "QualityScore",
    "TrainConfig",
    "TrainedModel",
    "fit_arrays",
    "gini_impurity",
    "label_for",
    "labels_to_targets",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "score",
    "score_batch",
    "train",
]
