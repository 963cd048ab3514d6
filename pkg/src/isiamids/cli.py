"""``isiamids`` command line.

Verbs: ``synth`` (write surrogate raw CSVs), ``preprocess``, ``train``, ``eval``,
``permute`` and ``bench``.  Each command writes a ``manifest.json`` into its
output directory listing input and artifact digests, the config digest and the
seed.

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant violation
(including a sub-model that diverged during training).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, container, metrics, synth
from .config import ConfigError, RunConfig
from .dataio import PROFILES, DataError, FeatureMatrix, Preprocessor, load_dataset, save_dataset
from .ensemble import (ISiamIdsModel, filter_layer1, format_permutations, parse_order, permutations_identical,
                       predict, run_permutations, write_trace)
from .pipeline import (TrainingError, evaluate, format_auc_table, format_multiclass_grid, roc_svg,
                       train_cascade)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3
BUNDLE_NAME = "bundle.isb"


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, inputs, artifacts) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "config": json.loads(cfg.canonical()),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "artifacts": {Path(p).name: sha256_file(p) for p in artifacts},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg["out"]:
        raise UsageError("an output directory is required (--out or config key 'out')")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset_file(cfg: RunConfig, role: str) -> Path:
    """``data`` may name a preprocessed file or a directory holding ``<role>.ds``."""
    if not cfg["data"]:
        raise UsageError("a preprocessed dataset is required (--data or config key 'data')")
    p = Path(cfg["data"])
    return p / f"{role}.ds" if p.is_dir() else p


def _load_bundle(path) -> ISiamIdsModel:
    try:
        return ISiamIdsModel.load(path)
    except OSError as exc:
        raise DataError(f"{path}: cannot read model bundle ({exc.strerror})") from exc
    except container.ContainerError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _check_compatible(model: ISiamIdsModel, stored) -> None:
    if model.fingerprint and model.fingerprint != stored.prep.fingerprint():
        raise DataError("feature mismatch: the dataset was preprocessed with a different codebook or scaling "
                        "than the model's training data")
    if stored.data.X.shape[1] != model.xgb.n_features:
        raise DataError(f"feature mismatch: dataset has {stored.data.X.shape[1]} features, "
                        f"model expects {model.xgb.n_features}")


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    return path


def format_class_counts(train: FeatureMatrix, test: FeatureMatrix) -> str:
    lines = ["class\ttrain\t%\ttest\t%"]
    tc, sc = train.class_counts(), test.class_counts()
    for name in train.class_names:
        lines.append(f"{name}\t{tc[name]}\t{100 * tc[name] / train.n:.2f}\t{sc[name]}\t{100 * sc[name] / test.n:.2f}")
    lines.append(f"total\t{train.n}\t100.00\t{test.n}\t100.00")
    return "\n".join(lines)


# -- commands ---------------------------------------------------------------

def cmd_synth(cfg: RunConfig, scale: float = 1.0) -> int:
    out = _out_dir(cfg)
    train, test = synth.write_dataset(cfg["dataset"], out, seed=cfg.seed, scale=scale)
    write_manifest(out, "synth", cfg, [], [train, test])
    print(f"wrote {train} and {test}")
    return EXIT_OK


def cmd_preprocess(cfg: RunConfig) -> int:
    if not cfg["train"] or not cfg["test"]:
        raise UsageError("preprocess needs raw --train and --test files")
    out = _out_dir(cfg)
    profile = PROFILES[cfg["dataset"]]
    raw_train, raw_test = profile.read(cfg["train"]), profile.read(cfg["test"])
    prep = Preprocessor.fit(profile, raw_train)
    train, test = prep.transform(raw_train), prep.transform(raw_test)
    artifacts = [Path(out / "train.ds"), Path(out / "test.ds")]
    save_dataset(artifacts[0], train, prep, "train")
    save_dataset(artifacts[1], test, prep, "test")
    counts = format_class_counts(train, test)
    artifacts.append(_write(out, "counts.txt", counts))
    write_manifest(out, "preprocess", cfg, [cfg["train"], cfg["test"]], artifacts)
    print(counts)
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    src = _dataset_file(cfg, "train")
    stored = load_dataset(src)
    model, log = train_cascade(stored.data, cfg, stored.prep.fingerprint(),
                               progress=lambda m: print(m, file=sys.stderr))
    bundle = out / BUNDLE_NAME
    model.save(bundle)
    artifacts = [bundle, _write(out, "train_log.txt", log.text()), _write(out, "config.txt", cfg.to_text())]
    write_manifest(out, "train", cfg, [src], artifacts)
    print(f"bundle {bundle} sha256 {sha256_file(bundle)}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, bundle: str, svg: bool = False) -> int:
    out = _out_dir(cfg)
    model = _load_bundle(bundle)
    src = _dataset_file(cfg, "test")
    stored = load_dataset(src)
    _check_compatible(model, stored)
    order = parse_order(cfg["order"])
    ev = evaluate(model, stored.data, order)

    artifacts = []
    artifacts.append(_write(out, "multiclass.txt", format_multiclass_grid(ev.multiclass) + "\n\n"
                            + metrics.format_class_reports(ev.class_reports)))
    binary_text = (metrics.format_binary_grid("I-SiamIDS", ev.binary) + f"\n\naccuracy\t{ev.accuracy:.6f}\n\n"
                   + metrics.format_class_reports(ev.binary_reports))
    artifacts.append(_write(out, "binary.txt", binary_text))
    stage_text = "\n\n".join(metrics.format_binary_grid(name, cm) + f"\naccuracy\t{metrics.accuracy(cm):.6f}"
                             for name, cm in ev.stages.items())
    ok, mono = ev.monotonicity()
    artifacts.append(_write(out, "stages.txt", stage_text + "\n\n" + mono))
    artifacts.append(_write(out, "auc.txt", format_auc_table(ev.rocs, cfg["dataset"])))
    for key, curve in ev.rocs.items():
        subject, cls = key.split("/")
        path = out / f"roc_{subject}_{cls}.tsv"
        metrics.write_roc_points(path, curve)
        artifacts.append(path)
    if svg:
        for cls in ("normal", "attack"):
            curves = {k.split("/")[0]: c for k, c in ev.rocs.items() if k.endswith("/" + cls)}
            artifacts.append(_write(out, f"roc_{cls}.svg", roc_svg(curves)))
    trace_path = out / "trace.tsv"
    write_trace(trace_path, ev.trace, model.attack_families)
    artifacts.append(trace_path)
    report = {
        "order": order,
        "accuracy": ev.accuracy,
        "binary": ev.binary.to_dict(),
        "stages": {k: v.to_dict() for k, v in ev.stages.items()},
        "auc": {k: v.auc for k, v in ev.rocs.items()},
        "classes": [r.__dict__ for r in ev.class_reports],
        "terminal_sets": ev.trace.set_sizes(),
        "monotonicity_ok": ok,
    }
    artifacts.append(_write(out, "report.json", json.dumps(report, indent=2, sort_keys=True)))
    write_manifest(out, "eval", cfg, [bundle, src], artifacts)

    print(binary_text)
    print()
    print(format_auc_table(ev.rocs, cfg["dataset"]))
    print()
    print(mono)
    if not ok or not ev.conservation():
        raise InvariantViolation("OR-monotonicity or sample conservation violated")
    return EXIT_OK


def permute_stages(stages, X, truth, out: Path | None = None) -> tuple[int, str]:
    """Run all six orders; exit code is nonzero unless every order agrees."""
    reports = run_permutations(stages, X, truth)
    text = format_permutations(reports)
    if out is not None:
        _write(out, "permutations.txt", text)
    return (EXIT_OK if permutations_identical(reports) else EXIT_INVARIANT), text


def cmd_permute(cfg: RunConfig, bundle: str) -> int:
    out = _out_dir(cfg)
    model = _load_bundle(bundle)
    src = _dataset_file(cfg, "test")
    stored = load_dataset(src)
    _check_compatible(model, stored)
    code, text = permute_stages(model.stages(), stored.data.X, stored.data.y != 0, out)
    write_manifest(out, "permute", cfg, [bundle, src], [out / "permutations.txt"])
    print(text, end="")
    if code != EXIT_OK:
        raise InvariantViolation("the six chain orders disagree on final labels")
    return EXIT_OK


def bench_report(model: ISiamIdsModel, X, y_binary, per_class: int, seed: int, repeats: int) -> dict:
    """Per-sample timing of every sub-model and the chain, plus the short-circuit comparison."""
    picks = metrics.sample_per_class(y_binary, per_class, seed)
    stages = model.stages()
    subjects = {
        "b-xgboost": stages["X"].scores,
        "siamese": stages["S"].scores,
        "dnn": stages["A"].scores,
        "m-xgboost": model.layer2.predict_label,
        "I-SiamIDS": lambda x: predict(model, x),
    }
    timings = [metrics.time_per_sample(fn, X, y_binary, subject=name, picks=picks) for name, fn in subjects.items()]

    chain = model.chain()
    trace = filter_layer1(chain, X)
    first = np.flatnonzero((trace.final == 1) & (trace.terminal_stage == 0))
    full = np.flatnonzero(trace.terminal_stage == 2)
    comparison = None
    if first.size and full.size:
        i, j = int(first[0]), int(full[0])
        short = metrics.median_call_seconds(lambda: filter_layer1(chain, X[i:i + 1]), repeats)
        long = metrics.median_call_seconds(lambda: filter_layer1(chain, X[j:j + 1]), repeats)
        comparison = {"stage1_attack_index": i, "all_stages_index": j, "median_stage1_attack": short,
                      "median_all_stages": long, "short_circuit_faster": short <= long, "repeats": repeats}
    return {"per_class": per_class, "seed": seed, "order": chain.order,
            "timings": [t.to_dict() for t in timings], "short_circuit": comparison}


def format_bench(report: dict) -> str:
    lines = ["classifier\tnormal (s/sample)\tattack (s/sample)"]
    for t in report["timings"]:
        lines.append(f"{t['subject']}\t{t['mean_seconds']['normal']:.6f}\t{t['mean_seconds']['attack']:.6f}")
    c = report["short_circuit"]
    if c is None:
        lines.append("short-circuit comparison unavailable: no sample ends at stage 1 or no sample reaches stage 3")
    else:
        lines.append(f"short-circuit: median {c['median_stage1_attack']:.6f}s (attack at stage 1) vs "
                     f"{c['median_all_stages']:.6f}s (all stages), over {c['repeats']} repeats: "
                     f"{'holds' if c['short_circuit_faster'] else 'DOES NOT HOLD'}")
    return "\n".join(lines)


def cmd_bench(cfg: RunConfig, bundle: str) -> int:
    out = _out_dir(cfg)
    model = _load_bundle(bundle)
    src = _dataset_file(cfg, "test")
    stored = load_dataset(src)
    _check_compatible(model, stored)
    y = (stored.data.y != 0).astype(np.int64)
    try:
        report = bench_report(model, stored.data.X, y, int(cfg["bench.per_class"]),
                              cfg.component_seed("bench"), int(cfg["bench.repeats"]))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    text = format_bench(report)
    artifacts = [_write(out, "timing.txt", text),
                 _write(out, "timing.json", json.dumps(report, indent=2, sort_keys=True))]
    write_manifest(out, "bench", cfg, [bundle, src], artifacts)
    print(text)
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="global seed (required here or in the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dataset", choices=sorted(PROFILES), help="raw dataset layout")
    common.add_argument("--order", help="Layer-1 chain order, e.g. XSD or P5")

    p = _Parser(prog="isiamids", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="write surrogate raw train/test CSV files")
    s.add_argument("--scale", type=float, default=1.0, help="shrink every class by this factor")
    s = sub.add_parser("preprocess", parents=[common], help="quantize and normalize raw CSV files")
    s.add_argument("--train", help="raw training CSV")
    s.add_argument("--test", help="raw test CSV")
    s = sub.add_parser("train", parents=[common], help="train all four sub-models")
    s.add_argument("--data", help="preprocessed directory or train.ds file")
    for verb, text in (("eval", "metrics, ROC points and the filtration trace"),
                       ("permute", "run all six chain orders"), ("bench", "per-sample timing")):
        s = sub.add_parser(verb, parents=[common], help=text)
        s.add_argument("--bundle", required=True, help="trained model bundle")
        s.add_argument("--data", help="preprocessed directory or test.ds file")
        if verb == "eval":
            s.add_argument("--svg", action="store_true", help="also write ROC curves as SVG")
        if verb == "bench":
            s.add_argument("--per-class", type=int, help="samples timed per class (default 10)")
            s.add_argument("--repeats", type=int, help="repeats for the short-circuit medians (default 50)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"out": args.out, "dataset": args.dataset, "order": args.order, "seed": args.seed,
                 "train": getattr(args, "train", None), "test": getattr(args, "test", None),
                 "data": getattr(args, "data", None),
                 "bench.per_class": getattr(args, "per_class", None), "bench.repeats": getattr(args, "repeats", None)}
    try:
        cfg = RunConfig.load(args.config, overrides) if args.config else RunConfig.build(None, overrides)
        cmd = args.command
        if cmd == "synth":
            return cmd_synth(cfg, args.scale)
        if cmd == "preprocess":
            return cmd_preprocess(cfg)
        if cmd == "train":
            return cmd_train(cfg)
        if cmd == "eval":
            return cmd_eval(cfg, args.bundle, args.svg)
        if cmd == "permute":
            return cmd_permute(cfg, args.bundle)
        return cmd_bench(cfg, args.bundle)
    except (ConfigError, UsageError) as exc:
        print(f"isiamids: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, container.ContainerError) as exc:
        print(f"isiamids: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, InvariantViolation) as exc:
        print(f"isiamids: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
