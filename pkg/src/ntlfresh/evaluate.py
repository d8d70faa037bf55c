"""Stratified k-fold CV, randomized hyperparameter search, feature-set
slicing and the classifier x feature-set benchmark report."""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import learn
from .core import FAMILY_ORDER, EmptyResult, Family, FeatureMatrix, NtlError, TargetVector
from .rng import derive_seed, make_generator
from .selection import PValueTable, TrainingRowSelector, select_features

logger = logging.getLogger(__name__)

DEFAULT_N_ITER = 100
DEFAULT_FOLDS = 10


class TooFewSamples(NtlError, ValueError):
    pass


class EmptySlice(NtlError, ValueError):
    pass


# ---------------------------------------------------------------- search spaces

@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusive

    def sample(self, gen):
        return int(gen.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class RealRange:
    low: float
    high: float
    log: bool = False

    def sample(self, gen):
        if self.log:
            return float(math.exp(gen.uniform(math.log(self.low), math.log(self.high))))
        return float(gen.uniform(self.low, self.high))


@dataclass(frozen=True)
class Choice:
    values: tuple

    def sample(self, gen):
        return self.values[int(gen.integers(0, len(self.values)))]


REQUIRED_HYPERPARAMETERS = {
    "dt": ("max_depth", "min_samples_split"),
    "rf": ("max_depth", "min_samples_split", "n_estimators"),
    "gbt": ("n_estimators", "learning_rate", "max_depth"),
    "lsvm": ("lam", "epochs"),
}


@dataclass(frozen=True)
class SearchSpace:
    """Per model kind, an ordered list of ``(name, distribution)``."""

    spaces: dict

    def __post_init__(self):
        for kind, required in REQUIRED_HYPERPARAMETERS.items():
            if kind in self.spaces:
                names = {n for n, _ in self.spaces[kind]}
                missing = [r for r in required if r not in names]
                if missing:
                    raise ValueError(f"search space for {kind} lacks {missing}")

    def sample(self, kind: str, gen) -> dict:
        return {name: dist.sample(gen) for name, dist in self.spaces[kind]}

    @classmethod
    def default(cls) -> "SearchSpace":
        return cls({
            "dt": [("max_depth", IntRange(2, 20)), ("min_samples_split", IntRange(2, 50)),
                   ("min_samples_leaf", IntRange(1, 10)),
                   ("max_features_fraction", Choice((0.25, 0.5, 1.0)))],
            "rf": [("max_depth", IntRange(2, 20)), ("min_samples_split", IntRange(2, 50)),
                   ("min_samples_leaf", IntRange(1, 10)), ("n_estimators", IntRange(10, 200)),
                   ("max_features_fraction", Choice((0.1, 0.2, 0.33, 0.5))),
                   ("bootstrap", Choice((True,)))],
            "gbt": [("n_estimators", IntRange(10, 200)), ("learning_rate", RealRange(0.01, 0.3)),
                    ("max_depth", IntRange(1, 5))],
            "lsvm": [("lam", RealRange(1e-4, 1.0, log=True)), ("epochs", IntRange(10, 200))],
        })


# ---------------------------------------------------------------- folds and CV

def kfold_split(n: int, k: int, labels, seed: int):
    """Stratified folds: each class is shuffled, the classes are concatenated
    and position ``i`` goes to fold ``i mod k``."""
    y = np.asarray(labels)
    if k < 2:
        raise TooFewSamples("need at least 2 folds")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    if y.shape[0] != n:
        raise ValueError("labels length must equal n")
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise TooFewSamples("both classes must be present")
    gen = make_generator(derive_seed(seed, "kfold"))
    order = np.concatenate([gen.permutation(np.nonzero(y == c)[0]) for c in classes])
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[order] = np.arange(n) % k
    all_idx = np.arange(n)
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


@dataclass
class CvResult:
    kind: str
    params: dict
    fold_scores: list[float]
    n_fits: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_scores))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_scores))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "fold_scores": self.fold_scores,
                "mean": self.mean, "std": self.std}


def _as_xy(X, y):
    if isinstance(X, FeatureMatrix):
        X = X.values
    y = getattr(y, "labels", y)
    return np.ascontiguousarray(X, dtype=np.float64), np.asarray(y).astype(np.int64)


def cross_val_score(kind: str, hp: dict, X, y, k: int = DEFAULT_FOLDS, seed: int = 0,
                    folds=None, fold_selector=None, key=()) -> CvResult:
    """Per fold: standardize on the training rows, fit, score the validation
    rows with balanced AUC at the model threshold.

    ``fold_selector(X_train, y_train) -> column indices`` restricts columns
    using training rows only (strict selection mode).
    """
    X, y = _as_xy(X, y)
    if folds is None:
        folds = kfold_split(X.shape[0], k, y, seed)
    params = learn.make_params(kind, hp)
    scores = []
    for f, (train, val) in enumerate(folds):
        Xt, Xv = X[train], X[val]
        if fold_selector is not None:
            cols = fold_selector(Xt, y[train])
            if len(cols) == 0:
                scores.append(0.5)  # no retained feature: only a constant classifier is possible
                continue
            Xt, Xv = Xt[:, cols], Xv[:, cols]
        std = learn.fit_standardizer(Xt)
        model = learn.train(kind, learn.apply_standardizer(std, Xt), y[train], params,
                            derive_seed(seed, *key, "fold", f))
        scores.append(learn.score(model, learn.apply_standardizer(std, Xv), y[val]))
    return CvResult(kind, dict(hp), [float(s) for s in scores], n_fits=len(folds))


@dataclass
class SearchResult:
    best_params: dict
    best: CvResult
    results: list[CvResult]

    @property
    def n_fits(self) -> int:
        return sum(r.n_fits for r in self.results)


def _cv_job(job):
    kind, hp, X, y, k, seed, folds, selector, key = job
    return cross_val_score(kind, hp, X, y, k, seed, folds=folds, fold_selector=selector, key=key)


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def randomized_search(kind: str, space: SearchSpace, X, y, n_iter: int = DEFAULT_N_ITER,
                      k: int = DEFAULT_FOLDS, seed: int = 0, workers: int = 1,
                      fold_selector=None, key=()) -> SearchResult:
    """Sample ``n_iter`` configurations, cross-validate each on the same
    folds, keep the highest mean (earliest sample on ties)."""
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    X, y = _as_xy(X, y)
    folds = kfold_split(X.shape[0], k, y, derive_seed(seed, "folds"))
    gen = make_generator(derive_seed(seed, *key, kind, "search"))
    configs = [space.sample(kind, gen) for _ in range(n_iter)]
    jobs = [(kind, hp, X, y, k, seed, folds, fold_selector, (*key, kind, "config", i))
            for i, hp in enumerate(configs)]
    results = _map(_cv_job, jobs, workers)
    best_i = max(range(len(results)), key=lambda i: (results[i].mean, -i))
    return SearchResult(dict(results[best_i].params), results[best_i], results)


# ---------------------------------------------------------------- feature sets

@dataclass(frozen=True)
class FeatureSetCombination:
    families: frozenset
    variant: str = "all"

    def __post_init__(self):
        fams = frozenset(Family.parse(f) if isinstance(f, str) else f for f in self.families)
        if not fams:
            raise ValueError("a feature set needs at least one family")
        if self.variant not in ("all", "retained"):
            raise ValueError("variant must be 'all' or 'retained'")
        object.__setattr__(self, "families", fams)

    @property
    def label(self) -> str:
        return "+".join(f.name for f in FAMILY_ORDER if f in self.families)

    @property
    def slug(self) -> str:
        return "_".join(f.value for f in FAMILY_ORDER if f in self.families) + f"_{self.variant}"

    @classmethod
    def parse(cls, text: str, variant: str = "all") -> "FeatureSetCombination":
        return cls(frozenset(Family.parse(t) for t in text.replace(",", "+").split("+")), variant)


def family_subsets() -> list[frozenset]:
    """The 7 non-empty subsets, singletons first, then pairs, then all three."""
    return [frozenset(c) for r in (1, 2, 3) for c in itertools.combinations(FAMILY_ORDER, r)]


ALL_COMBINATIONS = [FeatureSetCombination(s, v) for s in family_subsets()
                    for v in ("all", "retained")]


def slice_columns(matrix: FeatureMatrix, families) -> FeatureMatrix:
    fams = set(families)
    idx = [i for i, c in enumerate(matrix.columns) if c.family in fams]
    if not idx:
        raise EmptySlice(f"no columns of families {sorted(f.value for f in fams)}")
    return matrix.select_columns(idx)


def slice_feature_sets(matrix: FeatureMatrix, combination: FeatureSetCombination, target=None,
                       q: float = 0.05):
    """Columns of the requested families in original order. For the
    ``retained`` variant, selection runs on the sliced matrix and the
    p-value table is returned alongside: ``(matrix, table_or_None)``."""
    sliced = slice_columns(matrix, combination.families)
    if combination.variant == "all":
        return sliced, None
    if target is None:
        raise ValueError("the retained variant needs the target")
    return select_features(sliced, target, q)


# ---------------------------------------------------------------- benchmark

@dataclass
class Cell:
    mean: float
    std: float
    best_params: dict
    n_features: int
    fold_scores: list[float]


@dataclass
class BenchmarkReport:
    classifiers: list[str]
    combinations: list[FeatureSetCombination]
    cells: dict  # (classifier, combination.slug) -> Cell | None
    feature_counts: dict  # family -> {"features": n, "retained": n}
    config: dict = field(default_factory=dict)
    p_tables: dict = field(default_factory=dict)  # slug -> PValueTable

    def column_best(self) -> dict:
        """Best classifier per feature-set column (slug -> classifier)."""
        out = {}
        for combo in self.combinations:
            cands = [(self.cells[(c, combo.slug)].mean, -i, c)
                     for i, c in enumerate(self.classifiers) if self.cells[(c, combo.slug)]]
            if cands:
                out[combo.slug] = max(cands)[2]
        return out

    def row_best(self) -> dict:
        """Best feature-set column per classifier (classifier -> slug)."""
        out = {}
        for c in self.classifiers:
            cands = [(self.cells[(c, combo.slug)].mean, -i, combo.slug)
                     for i, combo in enumerate(self.combinations) if self.cells[(c, combo.slug)]]
            if cands:
                out[c] = max(cands)[2]
        return out

    def overall_best(self):
        cands = [(cell.mean, -i, -j, c, combo.slug)
                 for i, c in enumerate(self.classifiers)
                 for j, combo in enumerate(self.combinations)
                 if (cell := self.cells[(c, combo.slug)])]
        return max(cands)[3:] if cands else None

    def cell_records(self) -> list[dict]:
        col_best, row_best, best = self.column_best(), self.row_best(), self.overall_best()
        records = []
        for c in self.classifiers:
            for combo in self.combinations:
                cell = self.cells[(c, combo.slug)]
                records.append({
                    "classifier": c, "feature_set": combo.label, "variant": combo.variant,
                    "mean": None if cell is None else cell.mean,
                    "std": None if cell is None else cell.std,
                    "n_features": 0 if cell is None else cell.n_features,
                    "best_classifier": col_best.get(combo.slug) == c,
                    "best_feature_set": row_best.get(c) == combo.slug,
                    "best_overall": best == (c, combo.slug),
                    "best_params": None if cell is None else cell.best_params,
                })
        return records


def run_benchmark_on_matrix(matrix: FeatureMatrix, target, space: SearchSpace | None = None,
                            q: float = 0.05, k: int = DEFAULT_FOLDS,
                            n_iter: int = DEFAULT_N_ITER, seed: int = 0, workers: int = 1,
                            classifiers=learn.MODEL_KINDS, combinations=None,
                            strict_selection: bool = False) -> BenchmarkReport:
    space = space or SearchSpace.default()
    combinations = list(combinations or ALL_COMBINATIONS)
    labels = np.asarray(getattr(target, "labels", target)).astype(np.int64)
    cells, p_tables = {}, {}
    for combo in combinations:
        key = (combo.slug,)
        selector = None
        if strict_selection and combo.variant == "retained":
            sub = slice_columns(matrix, combo.families)
            selector = TrainingRowSelector(q)
            table = None
        else:
            sub, table = slice_feature_sets(matrix, combo, labels, q)
        if table is not None:
            p_tables[combo.slug] = table
        for kind in classifiers:
            if sub.values.shape[1] == 0:
                cells[(kind, combo.slug)] = None
                continue
            res = randomized_search(kind, space, sub.values, labels, n_iter, k, seed, workers,
                                    fold_selector=selector, key=key)
            cells[(kind, combo.slug)] = Cell(res.best.mean, res.best.std, res.best_params,
                                             sub.values.shape[1], res.best.fold_scores)
            logger.info("%s on %s: %.5f", kind, combo.slug, res.best.mean)
    missing = [(c, s.slug) for c in classifiers for s in combinations if (c, s.slug) not in cells]
    if missing:
        raise RuntimeError(f"incomplete benchmark grid: {missing}")

    full, full_table = select_features(matrix, labels, q)
    counts = {}
    for fam in FAMILY_ORDER:
        total = sum(1 for col in matrix.columns if col.family == fam)
        kept = sum(1 for col in full.columns if col.family == fam)
        counts[fam.value] = {"features": total, "retained": kept}
    p_tables.setdefault("all_families", full_table)
    config = {"q": q, "k": k, "n_iter": n_iter, "seed": seed, "strict_selection": strict_selection,
              "classifiers": list(classifiers), "backend": learn.BACKEND}
    return BenchmarkReport(list(classifiers), combinations, cells, counts, config, p_tables)


def run_benchmark(dataset, extraction_config=None, space: SearchSpace | None = None,
                  q: float = 0.05, k: int = DEFAULT_FOLDS, n_iter: int = DEFAULT_N_ITER,
                  seed: int = 0, workers: int = 1, **kwargs) -> BenchmarkReport:
    from .extract import ExtractionConfig, extract_all

    matrix = extract_all(dataset, extraction_config or ExtractionConfig(), workers=workers)
    target = TargetVector(list(matrix.customer_ids),
                          np.array([s.label for s in sorted(dataset.series,
                                                            key=lambda s: s.customer_id)]))
    if len(matrix.customer_ids) == 0:
        raise EmptyResult("empty dataset")
    return run_benchmark_on_matrix(matrix, target, space, q, k, n_iter, seed, workers, **kwargs)


# ---------------------------------------------------------------- rendering

def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.5f}"


def render_report(report: BenchmarkReport, fmt: str = "markdown") -> str:
    if fmt == "markdown":
        return _render_markdown(report)
    if fmt == "csv":
        return _render_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def _render_markdown(report: BenchmarkReport) -> str:
    out = ["# Benchmark report", "", "## Features before and after selection", "",
           "| Family | #Features | #Retained |", "|---|---|---|"]
    tot_f = tot_r = 0
    for fam in FAMILY_ORDER:
        c = report.feature_counts[fam.value]
        tot_f += c["features"]
        tot_r += c["retained"]
        out.append(f"| {fam.name} | {c['features']} | {c['retained']} |")
    out.append(f"| Total | {tot_f} | {tot_r} |")
    out += ["", "## Mean balanced AUC (std) per classifier and feature set", ""]
    col_best, row_best, best = report.column_best(), report.row_best(), report.overall_best()
    header = ["Clf."] + [f"{c.label} {'X_all' if c.variant == 'all' else 'X_ret'}"
                         for c in report.combinations]
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "---|" * len(header))
    for clf in report.classifiers:
        row = [clf.upper()]
        for combo in report.combinations:
            cell = report.cells[(clf, combo.slug)]
            if cell is None:
                row.append("n/a")
                continue
            marks = ("c" if col_best.get(combo.slug) == clf else "") + (
                "f" if row_best.get(clf) == combo.slug else "")
            text = _fmt(cell.mean)
            if best == (clf, combo.slug):
                text = f"**{text}**"
            if marks:
                text += f"^{marks}"
            row.append(f"{text} ({_fmt(cell.std)})")
        out.append("| " + " | ".join(row) + " |")
    out += ["", "^c best classifier per feature set; ^f best feature set per classifier; "
            "**bold** best overall.", ""]
    return "\n".join(out)


CSV_FIELDS = ["classifier", "feature_set", "variant", "mean", "std", "n_features",
              "best_classifier", "best_feature_set", "best_overall", "best_params"]


def _render_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=";", lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in report.cell_records():
        w.writerow([r["classifier"], r["feature_set"], r["variant"], _fmt(r["mean"]),
                    _fmt(r["std"]), r["n_features"], int(r["best_classifier"]),
                    int(r["best_feature_set"]), int(r["best_overall"]),
                    "n/a" if r["best_params"] is None else json.dumps(r["best_params"],
                                                                      sort_keys=True)])
    return buf.getvalue()


def report_to_dict(report: BenchmarkReport) -> dict:
    return {"config": report.config, "feature_counts": report.feature_counts,
            "cells": report.cell_records()}


def save_p_tables(report: BenchmarkReport, out_dir) -> list[str]:
    from pathlib import Path

    paths = []
    for slug, table in sorted(report.p_tables.items()):
        path = Path(out_dir) / f"pvalues_{slug}.csv"
        table.save(path)
        paths.append(str(path))
    return paths


__all__ = ["ALL_COMBINATIONS", "BenchmarkReport", "Cell", "Choice", "CvResult", "EmptySlice",
           "FeatureSetCombination", "IntRange", "PValueTable", "RealRange", "SearchResult",
           "SearchSpace", "TooFewSamples", "cross_val_score", "family_subsets", "kfold_split",
           "randomized_search", "render_report", "run_benchmark", "run_benchmark_on_matrix",
           "slice_columns", "slice_feature_sets"]
