"""``fqgate`` command line: synth, train, evaluate, gate, verify-impact.

Exit codes: 0 success, 1 runtime or data error, 2 usage or configuration
error. Every flag may also be given as a key in a ``--config`` JSON file
(flag name with dashes replaced by underscores); flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .classifiers import Family, TrainConfig, load_model, save_model, train
from .core import SplitSpec, split_dataset
from .errors import ConvergenceWarning, FQGateError, InvalidConfig
from .geometry import DEFAULT_MIN_BBOX_AREA, ResolutionGateConfig
from .io import read_dataset, read_gallery, write_dataset, write_gallery, write_json
from .metrics import evaluate
from .synthetic import SynthConfig, generate
from .verification import VerificationConfig, quality_gate, run_experiment

logger = logging.getLogger("fqgate")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class OutputError(Exception):
    """An output path cannot be written."""


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _cosine(text: str) -> float:
    value = float(text)
    if not -1.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [-1, 1], got {value}")
    return value


def _non_negative(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _family(text: str) -> Family:
    try:
        return Family.parse(text)
    except InvalidConfig as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# key -> (default, converter applied to config-file values)
_COMMON_OPTIONS: dict[str, dict[str, tuple[Any, Callable | None]]] = {
    "synth": {
        "out": (None, str),
        "seed": (7, _seed),
        "n_subjects": (None, int),
        "images_per_subject": (None, int),
    },
    "train": {
        "dataset": (None, str),
        "family": (None, _family),
        "seed": (0, _seed),
        "out": (None, str),
        "report": (None, str),
        "split_out": (None, str),
        "train_fraction": (0.8, float),
        "stratified": (True, bool),
        "threshold": (0.5, _probability),
        "family_params": ({}, dict),
    },
    "evaluate": {
        "model": (None, str),
        "dataset": (None, str),
        "threshold": (0.5, _probability),
        "out": (None, str),
    },
    "gate": {
        "model": (None, str),
        "dataset": (None, str),
        "quality_threshold": (0.5, _probability),
        "min_bbox_area": (DEFAULT_MIN_BBOX_AREA, _non_negative),
        "out": (None, str),
        "scores": (None, str),
    },
    "verify-impact": {
        "gallery": (None, str),
        "dataset": (None, str),
        "model": (None, str),
        "similarity_threshold": (0.5, _cosine),
        "quality_threshold": (0.5, _probability),
        "min_bbox_area": (DEFAULT_MIN_BBOX_AREA, _non_negative),
        "out": (None, str),
    },
}
_REQUIRED = {
    "synth": ("out",),
    "train": ("dataset", "family", "out"),
    "evaluate": ("model", "dataset"),
    "gate": ("model", "dataset", "out"),
    "verify-impact": ("gallery", "dataset"),
}
_SYNTH_FILE_KEYS = {f for f in SynthConfig.__dataclass_fields__} - {"seed", "n_subjects", "images_per_subject"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fqgate", description="Face quality gating toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with defaults for this command's flags")
        return p

    p = command("synth", "generate the synthetic benchmark (dataset.jsonl + gallery.json)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--n-subjects", type=int)
    p.add_argument("--images-per-subject", type=int)

    p = command("train", "train a classifier on an 80/20 split and report held-out metrics")
    p.add_argument("--dataset")
    p.add_argument("--family", type=_family, help="logreg, knn, svc, rf or mlp")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--out", help="model file to write")
    p.add_argument("--report", help="held-out report file (default: <out>.report.json)")
    p.add_argument("--split-out", help="directory to write train.jsonl and test.jsonl")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--no-stratify", dest="stratified", action="store_false")
    p.add_argument("--threshold", type=_probability)

    p = command("evaluate", "evaluate a model on a labeled dataset")
    p.add_argument("--model")
    p.add_argument("--dataset")
    p.add_argument("--threshold", type=_probability)
    p.add_argument("--out", help="report file to write")

    p = command("gate", "keep samples passing the resolution gate and quality threshold")
    p.add_argument("--model")
    p.add_argument("--dataset")
    p.add_argument("--quality-threshold", type=_probability)
    p.add_argument("--min-bbox-area", type=_non_negative)
    p.add_argument("--out", help="filtered dataset file")
    p.add_argument("--scores", help="per-sample CSV (default: <out>.scores.csv)")

    p = command("verify-impact", "baseline vs quality-gated verification report")
    p.add_argument("--gallery")
    p.add_argument("--dataset")
    p.add_argument("--model")
    p.add_argument("--similarity-threshold", type=_cosine)
    p.add_argument("--quality-threshold", type=_probability)
    p.add_argument("--min-bbox-area", type=_non_negative)
    p.add_argument("--out", help="report file to write")
    return parser


def resolve_options(command: str, args: argparse.Namespace) -> tuple[dict[str, Any], dict[str, Any]]:
    """Merge defaults, config-file values and flags (in increasing priority).

    Returns ``(options, extra)`` where ``extra`` holds synth generator keys
    that only the config file can set.
    """
    options_table = _COMMON_OPTIONS[command]
    flags = vars(args)
    file_values: dict[str, Any] = {}
    if "config" in flags:
        try:
            file_values = json.loads(Path(flags["config"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {flags['config']}: {exc}") from None
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
    allowed = set(options_table) | (_SYNTH_FILE_KEYS if command == "synth" else set())
    unknown = sorted(set(file_values) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {unknown}")

    options: dict[str, Any] = {}
    for key, (default, convert) in options_table.items():
        if key in flags:
            options[key] = flags[key]
        elif key in file_values:
            value = file_values[key]
            try:
                options[key] = convert(value) if convert and not isinstance(value, (dict, bool)) else value
            except (argparse.ArgumentTypeError, TypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        else:
            options[key] = default
    missing = [k for k in _REQUIRED[command] if options.get(k) is None]
    if missing:
        raise UsageError(f"{command}: missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    extra = {k: v for k, v in file_values.items() if k in _SYNTH_FILE_KEYS}
    return options, extra


def _check_outputs(inputs: list[str | None], outputs: list[str | None]) -> None:
    seen: dict[str, str] = {}
    for path in inputs:
        if path:
            seen[os.path.realpath(path)] = "input"
    for path in outputs:
        if not path:
            continue
        real = os.path.realpath(path)
        if real in seen:
            raise UsageError(f"output path {path} collides with another {seen[real]} path")
        seen[real] = "output"


def _write(writer: Callable[[], None], path) -> None:
    try:
        writer()
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_synth(opts: dict, extra: dict) -> int:
    cfg_kwargs = dict(extra)
    cfg_kwargs["seed"] = opts["seed"]
    for key in ("n_subjects", "images_per_subject"):
        if opts[key] is not None:
            cfg_kwargs[key] = opts[key]
    cfg = SynthConfig.from_dict(cfg_kwargs)
    out = Path(opts["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    dataset, gallery = generate(cfg)
    _write(lambda: write_dataset(dataset, out / "dataset.jsonl"), out / "dataset.jsonl")
    _write(lambda: write_gallery(gallery, out / "gallery.json"), out / "gallery.json")
    counts = dataset.label_counts()
    n_high = sum(v for k, v in counts.items() if k is not None and k.is_high)
    print(f"wrote {len(dataset)} samples ({len(gallery)} subjects) to {out}")
    print(f"high: {n_high}  low: {len(dataset) - n_high}")
    return EXIT_OK


def cmd_train(opts: dict, extra: dict) -> int:
    report_path = opts["report"] or str(Path(opts["out"]).with_suffix("")) + ".report.json"
    _check_outputs([opts["dataset"]], [opts["out"], report_path])
    split = SplitSpec(opts["train_fraction"], opts["seed"], bool(opts["stratified"]))
    cfg = TrainConfig(opts["family"], opts["seed"], opts["family_params"])
    dataset = read_dataset(opts["dataset"])
    train_set, test_set = split_dataset(dataset, split)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        try:
            model = train(train_set, cfg, timestamp=os.environ.get("SOURCE_DATE_EPOCH"))
        except FQGateError as exc:
            raise type(exc)(f"training {cfg.family.value}: {exc}") from exc
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = evaluate(model, test_set, opts["threshold"])
    _write(lambda: save_model(model, opts["out"]), opts["out"])
    doc = report.to_dict()
    doc.update({"family": cfg.family.value, "split": {"train": len(train_set), "test": len(test_set),
                                                      "seed": split.seed, "train_fraction": split.train_fraction}})
    _write(lambda: write_json(doc, report_path), report_path)
    if opts["split_out"]:
        split_dir = Path(opts["split_out"])
        _write(lambda: split_dir.mkdir(parents=True, exist_ok=True), split_dir)
        _write(lambda: write_dataset(train_set, split_dir / "train.jsonl"), split_dir)
        _write(lambda: write_dataset(test_set, split_dir / "test.jsonl"), split_dir)
    print(f"{cfg.family.value}: trained on {len(train_set)}, evaluated on {len(test_set)}")
    print(report.summary_line())
    return EXIT_OK


def cmd_evaluate(opts: dict, extra: dict) -> int:
    _check_outputs([opts["model"], opts["dataset"]], [opts["out"]])
    model = load_model(opts["model"])
    dataset = read_dataset(opts["dataset"])
    report = evaluate(model, dataset, opts["threshold"])
    if opts["out"]:
        _write(lambda: write_json(report.to_dict(), opts["out"]), opts["out"])
    print(report.summary_line())
    return EXIT_OK


def cmd_gate(opts: dict, extra: dict) -> int:
    scores_path = opts["scores"] or str(Path(opts["out"]).with_suffix("")) + ".scores.csv"
    _check_outputs([opts["model"], opts["dataset"]], [opts["out"], scores_path])
    cfg = VerificationConfig(
        quality_threshold=opts["quality_threshold"],
        gate=ResolutionGateConfig(opts["min_bbox_area"]),
    )
    model = load_model(opts["model"])
    dataset = read_dataset(opts["dataset"])
    decisions = quality_gate(model, dataset.samples, cfg)
    kept = dataset.subset([i for i, d in enumerate(decisions) if d.passed], f"{dataset.name}:gated")

    def write_scores():
        with open(scores_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", "bbox_area", "score", "decision"])
            for d in decisions:
                w.writerow([d.sample_id, repr(d.bbox_area), "" if d.score is None else repr(d.score),
                            "pass" if d.passed else "reject"])

    _write(lambda: write_dataset(kept, opts["out"]), opts["out"])
    _write(write_scores, scores_path)
    print(f"kept {len(kept)} of {len(dataset)} samples ({len(dataset) - len(kept)} filtered out)")
    return EXIT_OK


def cmd_verify_impact(opts: dict, extra: dict) -> int:
    _check_outputs([opts["gallery"], opts["dataset"], opts["model"]], [opts["out"]])
    cfg = VerificationConfig(
        similarity_threshold=opts["similarity_threshold"],
        quality_threshold=opts["quality_threshold"],
        gate=ResolutionGateConfig(opts["min_bbox_area"]),
    )
    gallery = read_gallery(opts["gallery"])
    probes = read_dataset(opts["dataset"])
    reports = {"baseline": run_experiment(gallery, probes, None, cfg)}
    if opts["model"]:
        reports["gated"] = run_experiment(gallery, probes, load_model(opts["model"]), cfg)
    doc = {"format_version": 1, **{k: r.to_dict() for k, r in reports.items()}}
    if opts["out"]:
        _write(lambda: write_json(doc, opts["out"]), opts["out"])
    print(f"{'condition':<10} {'attempts':>9} {'mean cos':>9} {'FRR %':>7}")
    for name, r in reports.items():
        mean = "n/a" if r.mean_similarity is None else f"{r.mean_similarity:.2f}"
        frr = "n/a" if r.frr is None else f"{100 * r.frr:.2f}"
        print(f"{name:<10} {r.n_attempts:>9} {mean:>9} {frr:>7}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "gate": cmd_gate,
    "verify-impact": cmd_verify_impact,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    verbose = getattr(args, "verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    command = args.command
    ns = argparse.Namespace(**{k: v for k, v in vars(args).items() if k not in ("command", "verbose")})
    try:
        opts, extra = resolve_options(command, ns)
        return COMMANDS[command](opts, extra)
    except (UsageError, InvalidConfig, OutputError) as exc:
        print(f"fqgate {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FQGateError, OSError) as exc:
        print(f"fqgate {command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
