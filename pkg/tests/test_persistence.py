import json

import numpy as np
import pytest

from fqgate.classifiers import TrainConfig, score_batch, train
from fqgate.classifiers.persistence import dumps_model, load_model, model_from_dict, model_to_dict, save_model
from fqgate.errors import CorruptModelFile, FormatVersionMismatch
from fqgate.geometry import feature_matrix

FAST = {"rf": {"n_trees": 20}, "mlp": {"epochs": 200}, "logreg": {"max_iter": 500}, "knn": {}, "svc": {}}


@pytest.fixture(scope="module", params=sorted(FAST))
def trained(request, small_bench):
    ds, _ = small_bench
    return train(ds, TrainConfig(request.param, seed=3, family_params=FAST[request.param]))


def test_round_trip_scores_identically(trained, small_bench, tmp_path, rng):
    ds, _ = small_bench
    path = tmp_path / "model.json"
    save_model(trained, path)
    loaded = load_model(path)
    X = np.vstack([feature_matrix(ds.samples), rng.uniform(-0.5, 1.5, size=(200, 10))])
    delta = np.max(np.abs(score_batch(loaded, X) - score_batch(trained, X)))
    tol = 0.0 if trained.family.value in ("rf", "knn") else 1e-9
    assert delta <= tol
    assert loaded.family is trained.family
    assert loaded.feature_order == trained.feature_order
    assert loaded.train_meta == trained.train_meta


def test_serialization_is_stable(trained):
    text = dumps_model(trained)
    assert dumps_model(model_from_dict(json.loads(text))) == text


def test_unknown_format_version(trained, tmp_path):
    doc = model_to_dict(trained)
    doc["format_version"] = "999"
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatVersionMismatch):
        load_model(path)


def test_truncated_file(trained, tmp_path):
    path = tmp_path / "m.json"
    text = dumps_model(trained)
    path.write_text(text[: len(text) // 2])
    with pytest.raises(CorruptModelFile):
        load_model(path)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("parameters"),
    lambda d: d.update(family="boosting"),
    lambda d: d.update(feature_order=[1, 2]),
    lambda d: d.update(parameters={}),
])
def test_malformed_documents(trained, mutate):
    doc = model_to_dict(trained)
    mutate(doc)
    with pytest.raises(CorruptModelFile):
        model_from_dict(doc)


def test_missing_version_is_corrupt():
    with pytest.raises(CorruptModelFile):
        model_from_dict({"family": "rf"})


def test_tree_with_cycle_is_corrupt(small_bench):
    ds, _ = small_bench
    model = train(ds, TrainConfig("rf", seed=1, family_params={"n_trees": 2}))
    doc = model_to_dict(model)
    tree = doc["parameters"]["trees"][0]
    tree["left"]["data"][0] = 0
    with pytest.raises(CorruptModelFile):
        model_from_dict(doc)
