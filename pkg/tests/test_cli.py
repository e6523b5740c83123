import csv
import json

import pytest

from fqgate.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run("synth", "--out", root / "data", "--n-subjects", 40, "--seed", 5) == 0
    assert run("train", "--dataset", root / "data" / "dataset.jsonl", "--family", "rf", "--seed", 1,
               "--out", root / "rf.json", "--split-out", root / "split") == 0
    return root


def read_json(path):
    return json.loads(path.read_text())


def test_synth_outputs(workspace, capsys):
    lines = (workspace / "data" / "dataset.jsonl").read_text().splitlines()
    assert len(lines) == 400
    assert set(read_json(workspace / "data" / "gallery.json")["subjects"]) == {f"subject_{i:04d}" for i in range(40)}


def test_synth_minimal(tmp_path, capsys):
    assert run("synth", "--out", tmp_path, "--n-subjects", 1, "--images-per-subject", 1) == 0
    assert len((tmp_path / "dataset.jsonl").read_text().splitlines()) == 1
    assert "wrote 1 samples" in capsys.readouterr().out


def test_synth_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("synth", "--out", blocker / "sub", "--n-subjects", 1) == 2
    assert "cannot create output directory" in capsys.readouterr().err


def test_synth_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_subjects": 2, "images_per_subject": 3, "yaw_range": 0}))
    assert run("synth", "--config", cfg, "--out", tmp_path / "o", "--n-subjects", 4) == 0
    records = [json.loads(l) for l in (tmp_path / "o" / "dataset.jsonl").read_text().splitlines()]
    assert len(records) == 12
    assert all(r["ext"]["synth"]["yaw"] == 0 for r in records)


@pytest.mark.parametrize("doc", [{"n_subject": 2}, {"family": "rf"}, [1, 2]])
def test_config_is_strict(tmp_path, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 2


def test_train_writes_model_report_and_split(workspace, capsys):
    report = read_json(workspace / "rf.report.json")
    assert report["format_version"] == 1 and report["family"] == "rf"
    assert report["split"] == {"train": 320, "test": 80, "seed": 1, "train_fraction": 0.8}
    assert read_json(workspace / "rf.json")["format_version"] == 1
    assert len((workspace / "split" / "test.jsonl").read_text().splitlines()) == 80


@pytest.mark.parametrize("extra", [("--family", "boosting"), ("--family", "rf", "--threshold", "1.0000001"),
                                   ("--family", "rf", "--bogus", "1"), ()])
def test_train_usage_errors(workspace, tmp_path, extra):
    assert run("train", "--dataset", workspace / "data" / "dataset.jsonl", "--out", tmp_path / "m.json", *extra) == 2


def test_train_runtime_errors(tmp_path, capsys):
    (tmp_path / "d.jsonl").write_text('{"sample_id": "a"}\n')
    assert run("train", "--dataset", tmp_path / "d.jsonl", "--family", "rf", "--out", tmp_path / "m.json") == 1
    assert "line 1" in capsys.readouterr().err
    assert run("train", "--dataset", tmp_path / "missing.jsonl", "--family", "rf", "--out", tmp_path / "m.json") == 1


def test_train_single_class_error_names_family(tmp_path, capsys):
    assert run("synth", "--out", tmp_path, "--n-subjects", 3, "--images-per-subject", 2) == 0
    lines = [json.loads(l) for l in (tmp_path / "dataset.jsonl").read_text().splitlines()]
    for r in lines:
        r["label"] = "low"
    (tmp_path / "low.jsonl").write_text("".join(json.dumps(r) + "\n" for r in lines))
    assert run("train", "--dataset", tmp_path / "low.jsonl", "--family", "svc", "--out", tmp_path / "m.json") == 1
    assert "training svc" in capsys.readouterr().err


def test_output_colliding_with_input(workspace):
    ds = workspace / "data" / "dataset.jsonl"
    assert run("train", "--dataset", ds, "--family", "rf", "--out", ds) == 2


def test_evaluate_train_split_beats_test_split(workspace, tmp_path):
    assert run("evaluate", "--model", workspace / "rf.json", "--dataset", workspace / "split" / "train.jsonl",
               "--out", tmp_path / "train.json") == 0
    assert run("evaluate", "--model", workspace / "rf.json", "--dataset", workspace / "split" / "test.jsonl",
               "--out", tmp_path / "test.json") == 0
    assert read_json(tmp_path / "train.json")["accuracy"] >= read_json(tmp_path / "test.json")["accuracy"]
    assert read_json(tmp_path / "test.json")["accuracy"] == read_json(workspace / "rf.report.json")["accuracy"]


def test_evaluate_threshold_zero(workspace, capsys):
    assert run("evaluate", "--model", workspace / "rf.json", "--dataset", workspace / "split" / "test.jsonl",
               "--threshold", 0) == 0
    assert "recall 100.00" in capsys.readouterr().out


def test_evaluate_threshold_out_of_range(workspace):
    assert run("evaluate", "--model", workspace / "rf.json", "--dataset", workspace / "split" / "test.jsonl",
               "--threshold", "1.0000001") == 2


def test_evaluate_corrupt_model(workspace, tmp_path):
    (tmp_path / "m.json").write_text('{"format_version": 1')
    assert run("evaluate", "--model", tmp_path / "m.json", "--dataset", workspace / "split" / "test.jsonl") == 1


def test_gate_pass_through(workspace, tmp_path):
    src = workspace / "data" / "dataset.jsonl"
    assert run("gate", "--model", workspace / "rf.json", "--dataset", src, "--quality-threshold", 0,
               "--min-bbox-area", 0, "--out", tmp_path / "f.jsonl") == 0
    assert (tmp_path / "f.jsonl").read_bytes() == src.read_bytes()


def test_gate_unanimous_boundary(workspace, tmp_path):
    assert run("gate", "--model", workspace / "rf.json", "--dataset", workspace / "data" / "dataset.jsonl",
               "--quality-threshold", 1.0, "--out", tmp_path / "f.jsonl", "--scores", tmp_path / "s.csv") == 0
    rows = list(csv.DictReader((tmp_path / "s.csv").open()))
    assert len(rows) == 400
    for r in rows:
        assert (r["decision"] == "pass") == (r["score"] != "" and float(r["score"]) == 1.0)
        if float(r["bbox_area"]) < 4096:
            assert r["score"] == "" and r["decision"] == "reject"
    kept = [json.loads(l)["sample_id"] for l in (tmp_path / "f.jsonl").read_text().splitlines()]
    assert kept == [r["sample_id"] for r in rows if r["decision"] == "pass"]


def test_gate_matches_verify_impact(workspace, tmp_path):
    data = workspace / "data"
    assert run("gate", "--model", workspace / "rf.json", "--dataset", data / "dataset.jsonl",
               "--out", tmp_path / "f.jsonl") == 0
    assert run("verify-impact", "--gallery", data / "gallery.json", "--dataset", data / "dataset.jsonl",
               "--model", workspace / "rf.json", "--out", tmp_path / "v.json") == 0
    doc = read_json(tmp_path / "v.json")
    filtered = 400 - len((tmp_path / "f.jsonl").read_text().splitlines())
    assert filtered == doc["baseline"]["n_attempts"] - doc["gated"]["n_attempts"] == doc["gated"]["n_filtered_out"]


def test_verify_impact_baseline_only(workspace, tmp_path, capsys):
    data = workspace / "data"
    assert run("verify-impact", "--gallery", data / "gallery.json", "--dataset", data / "dataset.jsonl",
               "--out", tmp_path / "v.json") == 0
    doc = read_json(tmp_path / "v.json")
    assert set(doc) == {"format_version", "baseline"}
    assert set(doc["baseline"]) >= {"mean_similarity", "frr", "frr_percent", "n_attempts", "n_rejected"}
    assert "gated" not in capsys.readouterr().out


def test_verify_impact_vacuous_gate(workspace, tmp_path):
    data = workspace / "data"
    assert run("verify-impact", "--gallery", data / "gallery.json", "--dataset", data / "dataset.jsonl",
               "--model", workspace / "rf.json", "--quality-threshold", 0, "--min-bbox-area", 0,
               "--out", tmp_path / "v.json") == 0
    doc = read_json(tmp_path / "v.json")
    base, gated = doc["baseline"], dict(doc["gated"])
    assert gated.pop("n_filtered_out") == 0
    assert gated.pop("condition") == "gated" and base.pop("condition") == "baseline"
    assert gated == base


def test_verify_impact_unknown_subject(workspace, tmp_path):
    (tmp_path / "g.json").write_text('{"subjects": {"other": [1.0, 0.0]}}')
    assert run("verify-impact", "--gallery", tmp_path / "g.json",
               "--dataset", workspace / "data" / "dataset.jsonl") == 1


def test_no_command_is_usage_error():
    assert run() == 2
