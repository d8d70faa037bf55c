"""Command-line entry point: ``ntlfresh <stage> [flags]``.

Stages read and write the semicolon CSV artifacts of the library modules, so
running them one after another on intermediate files gives the same report as
``pipeline`` does in one process.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, learn
from .core import NtlError, TargetVector
from .evaluate import (ALL_COMBINATIONS, FeatureSetCombination, SearchSpace, randomized_search,
                       render_report, report_to_dict, run_benchmark_on_matrix, save_p_tables,
                       slice_feature_sets)
from .extract import ExtractionConfig, extract_all, load_feature_matrix, save_feature_matrix
from .ingest import PreprocessConfig, file_digest, load_dataset, preprocess, save_dataset
from .rng import derive_seed
from .selection import TrainingRowSelector, select_features
from .synth import SynthConfig, write_synth

logger = logging.getLogger("ntlfresh")

MANIFEST_FORMAT = "ntlfresh-manifest"


# ---------------------------------------------------------------- target files

def save_target(target: TargetVector, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=";", lineterminator="\n")
        w.writerow(["customer_id", "label"])
        for cid, label in zip(target.customer_ids, target.labels):
            w.writerow([cid, int(label)])


def load_target(path) -> TargetVector:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=";")
        if next(reader, None) != ["customer_id", "label"]:
            raise NtlError(f"{path}: not a target file")
        rows = list(reader)
    try:
        labels = np.array([int(r[1]) for r in rows], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise NtlError(f"{path}: malformed target row ({exc})") from None
    return TargetVector([r[0] for r in rows], labels)


def target_of(dataset) -> TargetVector:
    series = sorted(dataset.series, key=lambda s: s.customer_id)
    return TargetVector([s.customer_id for s in series],
                        np.array([s.label for s in series], dtype=np.int64))


def _aligned(matrix, target):
    if not target.aligned_with(matrix):
        raise NtlError("feature matrix and target list different customers")
    return target


# ---------------------------------------------------------------- argument parsing

def _families(text: str) -> list[str]:
    return [t for t in text.replace("+", ",").split(",") if t]


def _add_common(p, *names):
    opts = {
        "length": dict(type=int, default=24, help="months per customer window"),
        "column": dict(choices=("measured", "billed"), default="measured"),
        "drop-all-zero": dict(action="store_true", help="reject all-zero windows"),
        "fdr": dict(type=float, default=0.05, help="Benjamini-Hochberg level q"),
        "folds": dict(type=int, default=10),
        "n-iter": dict(type=int, default=100, help="sampled configurations per search"),
        "seed": dict(type=int, default=0),
        "workers": dict(type=int, default=1),
        "out-dir": dict(default=".", help="directory for all outputs"),
        "strict-selection": dict(action="store_true",
                                 help="select retained features inside each training fold"),
    }
    for name in names:
        p.add_argument(f"--{name}", **opts[name])


def _add_synth_opts(p):
    p.add_argument("--customers", type=int, default=2000)
    p.add_argument("--ntl-fraction", type=float, default=0.25)
    p.add_argument("--base-level", type=float, default=300.0)
    p.add_argument("--amplitude", type=float, default=60.0)
    p.add_argument("--noise-std", type=float, default=None, help="default: 0.05 * base level")
    p.add_argument("--fraud-drop", type=float, default=0.4)


def _add_grid_opts(p):
    p.add_argument("--classifiers", default=",".join(learn.MODEL_KINDS),
                   help="comma-separated subset of dt,rf,gbt,lsvm")
    p.add_argument("--combinations", default=None,
                   help="comma-separated slugs such as gts_avg_dif_retained (default: all 14)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ntlfresh", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a planted synthetic dataset")
    _add_synth_opts(p)
    _add_common(p, "length", "seed", "out-dir")

    p = sub.add_parser("preprocess", help="CSV inputs -> fixed-length customer windows")
    p.add_argument("--consumptions", required=True)
    p.add_argument("--inspections", required=True)
    _add_common(p, "length", "column", "drop-all-zero", "workers", "out-dir")

    p = sub.add_parser("extract", help="windows -> feature matrix and target")
    p.add_argument("--dataset", required=True)
    p.add_argument("--families", default="gts,avg,dif")
    _add_common(p, "workers", "out-dir")

    p = sub.add_parser("select", help="relevance tests and FDR selection")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    _add_common(p, "fdr", "out-dir")

    p = sub.add_parser("slice", help="feature-set combination of a matrix")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--families", required=True, help="e.g. avg,dif")
    p.add_argument("--variant", choices=("all", "retained"), default="all")
    _add_common(p, "fdr", "out-dir")

    p = sub.add_parser("train", help="randomized search for one classifier, then a final fit")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--model", choices=learn.MODEL_KINDS, required=True)
    _add_common(p, "fdr", "folds", "n-iter", "seed", "workers", "out-dir", "strict-selection")

    p = sub.add_parser("report", help="classifier x feature-set benchmark")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    _add_grid_opts(p)
    _add_common(p, "fdr", "folds", "n-iter", "seed", "workers", "out-dir", "strict-selection")

    p = sub.add_parser("pipeline", help="all stages; synthesizes inputs when none are given")
    p.add_argument("--consumptions")
    p.add_argument("--inspections")
    p.add_argument("--from-manifest", help="re-run the configuration recorded in a manifest")
    _add_synth_opts(p)
    _add_grid_opts(p)
    _add_common(p, "length", "column", "drop-all-zero", "fdr", "folds", "n-iter", "seed",
                "workers", "out-dir", "strict-selection")
    return parser


# ---------------------------------------------------------------- stages

def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _synth_config(args) -> SynthConfig:
    noise = 0.05 * args.base_level if args.noise_std is None else args.noise_std
    return SynthConfig(n_customers=args.customers, n_months=args.length,
                       ntl_fraction=args.ntl_fraction, base_level=args.base_level,
                       seasonal_amplitude=args.amplitude, noise_std=noise,
                       fraud_drop_fraction=args.fraud_drop, seed=args.seed)


def cmd_synth(args) -> int:
    paths = write_synth(_synth_config(args), _out(args))
    for p in paths.values():
        print(p)
    return 0


def _preprocess(args, cons, insp, out: Path):
    config = PreprocessConfig(series_length=args.length, consumption_column=args.column,
                              drop_all_zero=args.drop_all_zero, worker_count=args.workers)
    dataset = preprocess(cons, insp, config)
    save_dataset(dataset, out / "dataset.csv")
    _write_json(out / "ingest_stats.json", dataset.stats.as_dict())
    return dataset


def cmd_preprocess(args) -> int:
    out = _out(args)
    dataset = _preprocess(args, args.consumptions, args.inspections, out)
    print(f"{len(dataset.series)} customers -> {out / 'dataset.csv'}")
    return 0


def _extract(dataset, families, workers, out: Path):
    matrix = extract_all(dataset, ExtractionConfig.from_names(families), workers=workers)
    target = target_of(dataset)
    save_feature_matrix(matrix, out / "features.csv")
    save_target(target, out / "target.csv")
    return matrix, target


def cmd_extract(args) -> int:
    out = _out(args)
    matrix, _ = _extract(load_dataset(args.dataset), _families(args.families), args.workers, out)
    print(f"{matrix.shape[0]} x {matrix.shape[1]} -> {out / 'features.csv'}")
    return 0


def cmd_select(args) -> int:
    out = _out(args)
    matrix = load_feature_matrix(args.features)
    target = _aligned(matrix, load_target(args.target))
    retained, table = select_features(matrix, target, args.fdr)
    save_feature_matrix(retained, out / "features_retained.csv")
    table.save(out / "pvalues.csv")
    print(f"retained {retained.shape[1]} of {matrix.shape[1]} features")
    return 0


def cmd_slice(args) -> int:
    out = _out(args)
    matrix = load_feature_matrix(args.features)
    target = _aligned(matrix, load_target(args.target))
    combo = FeatureSetCombination.parse(args.families, args.variant)
    sliced, table = slice_feature_sets(matrix, combo, target, args.fdr)
    save_feature_matrix(sliced, out / f"features_{combo.slug}.csv")
    if table is not None:
        table.save(out / f"pvalues_{combo.slug}.csv")
    print(f"{combo.label} ({combo.variant}): {sliced.shape[1]} columns")
    return 0


def cmd_train(args) -> int:
    out = _out(args)
    matrix = load_feature_matrix(args.features)
    target = _aligned(matrix, load_target(args.target))
    selector = TrainingRowSelector(args.fdr) if args.strict_selection else None
    res = randomized_search(args.model, SearchSpace.default(), matrix.values, target.labels,
                            args.n_iter, args.folds, args.seed, args.workers,
                            fold_selector=selector)
    X = matrix.values
    if selector is not None:
        X = X[:, selector(X, target.labels)]
    std = learn.fit_standardizer(X)
    model = learn.train(args.model, learn.apply_standardizer(std, X), target.labels,
                        res.best_params, derive_seed(args.seed, "final"))
    _write_json(out / f"search_{args.model}.json",
                {"best_params": res.best_params, "best": res.best.to_dict(),
                 "n_fits": res.n_fits, "results": [r.to_dict() for r in res.results]})
    (out / f"model_{args.model}.json").write_text(learn.dump_model(model) + "\n",
                                                  encoding="utf-8")
    print(f"{args.model}: mean balanced AUC {res.best.mean:.5f} with {res.best_params}")
    return 0


def _grid(args):
    classifiers = [c for c in args.classifiers.split(",") if c]
    unknown = [c for c in classifiers if c not in learn.MODEL_KINDS]
    if unknown or not classifiers:
        raise NtlError(f"unknown classifiers {unknown}")
    if args.combinations is None:
        return classifiers, list(ALL_COMBINATIONS)
    by_slug = {c.slug: c for c in ALL_COMBINATIONS}
    slugs = [s for s in args.combinations.split(",") if s]
    bad = [s for s in slugs if s not in by_slug]
    if bad or not slugs:
        raise NtlError(f"unknown combinations {bad}; expected slugs like {ALL_COMBINATIONS[0].slug}")
    return classifiers, [by_slug[s] for s in slugs]


def _report(args, matrix, target, out: Path):
    classifiers, combinations = _grid(args)
    report = run_benchmark_on_matrix(matrix, target, SearchSpace.default(), args.fdr,
                                     args.folds, args.n_iter, args.seed, args.workers,
                                     classifiers=classifiers, combinations=combinations,
                                     strict_selection=args.strict_selection)
    md, text_csv = render_report(report, "markdown"), render_report(report, "csv")
    (out / "report.md").write_text(md, encoding="utf-8")
    (out / "report.csv").write_text(text_csv, encoding="utf-8")
    _write_json(out / "report.json", report_to_dict(report))
    save_p_tables(report, out)
    return report, report_digest(md, text_csv)


def report_digest(markdown: str, text_csv: str) -> str:
    h = hashlib.sha256()
    h.update(markdown.encode("utf-8"))
    h.update(b"\0")
    h.update(text_csv.encode("utf-8"))
    return h.hexdigest()


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


RECORDED = ("length", "column", "drop_all_zero", "fdr", "folds", "n_iter", "seed", "workers",
            "strict_selection", "classifiers", "combinations", "customers", "ntl_fraction",
            "base_level", "amplitude", "noise_std", "fraud_drop", "consumptions", "inspections")


def emit_manifest(path, args, argv, started, report, digest, inputs, stats) -> dict:
    """Everything needed to repeat the run: the resolved configuration, the
    input digests, ingest attrition and per-family retained counts."""
    manifest = {
        "format": MANIFEST_FORMAT, "tool": "ntlfresh", "version": __version__,
        "backend": learn.BACKEND, "command": args.command, "argv": list(argv),
        "config": {k: getattr(args, k) for k in RECORDED if hasattr(args, k)},
        "seed": args.seed, "inputs": inputs, "ingest": stats,
        "feature_counts": report.feature_counts, "report_digest": digest,
        "started": started, "finished": _now(),
    }
    _write_json(path, manifest)
    return manifest


def cmd_report(args, argv=()) -> int:
    started = _now()
    out = _out(args)
    matrix = load_feature_matrix(args.features)
    target = _aligned(matrix, load_target(args.target))
    report, digest = _report(args, matrix, target, out)
    inputs = {"features": file_digest(args.features), "target": file_digest(args.target)}
    emit_manifest(out / "manifest.json", args, argv, started, report, digest, inputs, None)
    print(f"report digest {digest}")
    return 0


def _load_manifest_into(args) -> None:
    try:
        manifest = json.loads(Path(args.from_manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise NtlError(f"cannot read manifest {args.from_manifest}: {exc}") from None
    if manifest.get("format") != MANIFEST_FORMAT or manifest.get("command") != "pipeline":
        raise NtlError(f"{args.from_manifest} is not a pipeline manifest")
    for k, v in manifest["config"].items():
        setattr(args, k, v)
    recorded = manifest.get("inputs", {})
    for key in ("consumptions", "inspections"):
        path = getattr(args, key)
        if path is not None and recorded.get(key) != file_digest(path):
            raise NtlError(f"input {path} differs from the file recorded in the manifest")


def cmd_pipeline(args, argv=()) -> int:
    started = _now()
    if args.from_manifest:
        _load_manifest_into(args)
    out = _out(args)
    if (args.consumptions is None) != (args.inspections is None):
        raise NtlError("give both --consumptions and --inspections, or neither")
    if args.consumptions is None:
        paths = write_synth(_synth_config(args), out)
        cons, insp = paths["consumptions"], paths["inspections"]
    else:
        cons, insp = args.consumptions, args.inspections
    dataset = _preprocess(args, cons, insp, out)
    matrix, target = _extract(dataset, ["gts", "avg", "dif"], args.workers, out)
    report, digest = _report(args, matrix, target, out)
    inputs = {"consumptions": dataset.digests["consumptions"],
              "inspections": dataset.digests["inspections"]}
    emit_manifest(out / "manifest.json", args, argv, started, report, digest, inputs,
                  dataset.stats.as_dict())
    print(f"report digest {digest}")
    return 0


COMMANDS = {"synth": cmd_synth, "preprocess": cmd_preprocess, "extract": cmd_extract,
            "select": cmd_select, "slice": cmd_slice, "train": cmd_train}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)  # exits with status 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args, argv)
        if args.command == "pipeline":
            return cmd_pipeline(args, argv)
        return COMMANDS[args.command](args)
    except (NtlError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "command": args.command}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
