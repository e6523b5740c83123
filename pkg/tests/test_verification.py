import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from fqgate.classifiers import Family, TrainConfig, TrainedModel, train
from fqgate.core import Dataset, Embedding
from fqgate.errors import DimensionMismatch, InvalidConfig, MissingEmbedding, MissingLandmarks, UnknownSubject, ZeroNormEmbedding
from fqgate.geometry import FEATURE_ORDER, ResolutionGateConfig
from fqgate.verification import (
    Gallery,
    VerificationConfig,
    cosine_similarity,
    quality_gate,
    run_experiment,
    summarize,
    verify_pair,
)
from fqgate.core import FaceSample

from .conftest import make_sample


def test_cosine_examples():
    v = np.array([0.3, -2.0, 5.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-15)
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_cosine_errors():
    with pytest.raises(DimensionMismatch):
        cosine_similarity(np.ones(3), np.ones(4))
    with pytest.raises(ZeroNormEmbedding):
        cosine_similarity(np.zeros(3), np.ones(3))


vec = st.lists(st.floats(-100, 100), min_size=4, max_size=4).map(np.array)


@settings(max_examples=200)
@given(a=vec, b=vec, lam=st.floats(1e-3, 1e3))
def test_cosine_symmetric_and_scale_invariant(a, b, lam):
    assume(np.linalg.norm(a) > 1e-3 and np.linalg.norm(b) > 1e-3)
    s = cosine_similarity(a, b)
    assert -1.0 <= s <= 1.0
    assert abs(s - cosine_similarity(b, a)) <= 1e-12
    assert abs(s - cosine_similarity(lam * a, b)) <= 1e-12


@pytest.mark.parametrize("sim,match", [(0.76, True), (0.49, False)])
def test_verify_pair_threshold(sim, match):
    ref, probe = Embedding([1.0, 0.0]), Embedding([sim, math.sqrt(1 - sim * sim)])
    s, ok = verify_pair(ref, probe, VerificationConfig(similarity_threshold=0.5))
    assert s == pytest.approx(sim, abs=1e-15)
    assert ok is match


def test_verify_pair_boundary_is_inclusive():
    ref, probe = Embedding([1.0, 0.0, 0.0, 0.0]), Embedding([1.0, 1.0, 1.0, 1.0])
    sim, ok = verify_pair(ref, probe)
    assert sim == 0.5 and ok


def test_config_validation():
    with pytest.raises(InvalidConfig):
        VerificationConfig(similarity_threshold=1.5)
    with pytest.raises(InvalidConfig):
        VerificationConfig(quality_threshold=-0.1)


def _probes_equal_to_refs():
    gallery = Gallery({"a": [1.0, 2.0, 3.0], "b": [0.0, 1.0, 0.0]})
    probes = Dataset((make_sample("p1", "a", embedding=[1.0, 2.0, 3.0]),
                      make_sample("p2", "b", embedding=[0.0, 5.0, 0.0])))
    return gallery, probes


def test_perfect_probes():
    gallery, probes = _probes_equal_to_refs()
    r = run_experiment(gallery, probes)
    assert (r.condition, r.n_attempts, r.n_rejected, r.frr, r.mean_similarity, r.std_similarity) == \
        ("baseline", 2, 0, 0.0, 1.0, 0.0)
    assert r.n_filtered_out is None
    assert "n_filtered_out" not in r.to_dict()


def test_probe_errors():
    gallery, _ = _probes_equal_to_refs()
    with pytest.raises(UnknownSubject):
        run_experiment(gallery, Dataset((make_sample("p", "zz", embedding=[1.0, 0, 0]),)))
    with pytest.raises(MissingEmbedding):
        run_experiment(gallery, Dataset((make_sample("p", "a"),)))
    bare = FaceSample("p", "a", None, None, embedding=Embedding([1.0, 0, 0]))
    assert run_experiment(gallery, Dataset((bare,))).n_attempts == 1
    always = TrainedModel(Family.LOGREG, FEATURE_ORDER, {}, {"weights": np.zeros(10), "bias": 0.0}, {})
    with pytest.raises(MissingLandmarks):
        run_experiment(gallery, Dataset((bare,)), always)
    with pytest.raises(UnknownSubject):
        gallery["zz"]


def test_summary_statistics():
    sims = [0.9, 0.2, 0.5, 0.7]
    r = summarize(sims, 0.5, "baseline")
    assert r.n_rejected == 1 and r.frr == 0.25
    assert r.mean_similarity == pytest.approx(np.mean(sims), abs=1e-15)
    assert r.std_similarity == pytest.approx(np.std(sims), abs=1e-15)
    assert r.to_dict()["std_kind"] == "population"
    empty = summarize([], 0.5, "gated", n_filtered_out=3)
    assert empty.frr is None and empty.mean_similarity is None


@given(st.lists(st.floats(-1, 1), max_size=50), st.randoms())
def test_summary_is_order_independent(sims, random):
    shuffled = list(sims)
    random.shuffle(shuffled)
    assert summarize(sims, 0.5, "baseline") == summarize(shuffled, 0.5, "baseline")


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=300), st.floats(-1, 1))
def test_frr_identity(sims, t):
    from fractions import Fraction

    r = summarize(sims, t, "baseline")
    assert 0.0 <= r.frr <= 1.0
    assert Fraction(r.frr).limit_denominator(r.n_attempts) == Fraction(r.n_rejected, r.n_attempts)


@pytest.fixture(scope="module")
def gated_setup(small_bench):
    ds, gallery = small_bench
    model = train(ds, TrainConfig("rf", seed=2, family_params={"n_trees": 30}))
    return ds, gallery, model


def test_gated_accounting(gated_setup):
    ds, gallery, model = gated_setup
    base = run_experiment(gallery, ds)
    gated = run_experiment(gallery, ds, model)
    assert gated.condition == "gated"
    assert gated.n_attempts + gated.n_filtered_out == base.n_attempts
    assert gated.frr < base.frr and gated.mean_similarity > base.mean_similarity


def test_vacuous_gate_equals_baseline(gated_setup):
    ds, gallery, model = gated_setup
    cfg = VerificationConfig(quality_threshold=0.0, gate=ResolutionGateConfig(min_bbox_area=0.0))
    base = run_experiment(gallery, ds, cfg=cfg)
    gated = run_experiment(gallery, ds, model, cfg)
    assert gated.n_filtered_out == 0
    assert (gated.n_attempts, gated.n_rejected, gated.frr, gated.mean_similarity, gated.std_similarity) == \
        (base.n_attempts, base.n_rejected, base.frr, base.mean_similarity, base.std_similarity)


def test_raising_quality_threshold_shrinks_compared_set(gated_setup):
    ds, _, model = gated_setup
    previous = None
    for t in np.linspace(0, 1, 11):
        kept = {d.sample_id for d in quality_gate(model, ds.samples, VerificationConfig(quality_threshold=float(t)))
                if d.passed}
        if previous is not None:
            assert kept <= previous
        previous = kept


def test_area_gate_runs_before_scoring(gated_setup):
    ds, _, model = gated_setup
    for d in quality_gate(model, ds.samples, VerificationConfig()):
        if d.bbox_area < 4096:
            assert d.score is None and not d.passed
        else:
            assert d.score is not None and d.passed == (d.score >= 0.5)
