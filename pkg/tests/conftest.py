import time

import numpy as np
import pytest

from fqgate.core import BoundingBox, Dataset, Embedding, FaceSample, KeyPointSet, QualityLabel, SplitSpec, split_dataset
from fqgate.synthetic import SynthConfig, generate

BENCH_SEED = 7
BENCH_FAMILIES = ("rf", "logreg", "knn", "svc", "mlp")

# wall-clock seconds spent building the shared benchmark fixtures
TIMINGS: dict[str, float] = {}


def make_sample(sample_id="s0", subject_id="subj", points=None, box=(0.0, 0.0, 100.0, 100.0),
                label=QualityLabel.HIGH, embedding=None):
    if points is None:
        points = [(30, 40), (70, 40), (50, 55), (35, 75), (65, 75)]
    return FaceSample(
        sample_id=sample_id,
        subject_id=subject_id,
        keypoints=KeyPointSet(tuple(points)),
        bbox=BoundingBox(*box),
        label=label,
        embedding=None if embedding is None else Embedding(embedding),
    )


def labeled_dataset(n_high, n_low, name="toy"):
    samples = [make_sample(f"h{i}", label=QualityLabel.HIGH) for i in range(n_high)]
    samples += [make_sample(f"l{i}", label=QualityLabel.LOW) for i in range(n_low)]
    return Dataset(tuple(samples), name)


@pytest.fixture(scope="session")
def small_bench():
    """A 60-subject benchmark: quick enough for unit tests."""
    return generate(SynthConfig(n_subjects=60, images_per_subject=10, seed=3))


@pytest.fixture(scope="session")
def bench():
    """The default benchmark (600 subjects x 10 images, seed 7) with its 80/20 split."""
    start = time.perf_counter()
    dataset, gallery = generate(SynthConfig(seed=BENCH_SEED))
    train, test = split_dataset(dataset, SplitSpec(0.8, BENCH_SEED))
    TIMINGS["generate"] = time.perf_counter() - start
    return {"dataset": dataset, "gallery": gallery, "train": train, "test": test}


@pytest.fixture(scope="session")
def bench_models(bench):
    from fqgate.classifiers import TrainConfig, train

    models = {}
    for fam in BENCH_FAMILIES:
        start = time.perf_counter()
        models[fam] = train(bench["train"], TrainConfig(fam, BENCH_SEED))
        TIMINGS[f"train_{fam}"] = time.perf_counter() - start
    return models


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
