import csv
import io

import numpy as np
import pytest

from ntlfresh.core import Family, FeatureMatrix, FeatureName, TargetVector
from ntlfresh.evaluate import (ALL_COMBINATIONS, Choice, FeatureSetCombination, IntRange,
                               SearchSpace, TooFewSamples, cross_val_score, family_subsets,
                               kfold_split, randomized_search, render_report,
                               run_benchmark_on_matrix, slice_columns, slice_feature_sets)
from ntlfresh.extract import extract_all

from conftest import make_series


def test_kfold_partition_laws():
    folds = kfold_split(10, 5, [0, 1] * 5, seed=1)
    assert len(folds) == 5
    vals = [set(v.tolist()) for _, v in folds]
    assert all(len(v) == 2 for v in vals)
    assert set().union(*vals) == set(range(10))
    for (train, val) in folds:
        assert not set(train) & set(val) and len(train) + len(val) == 10


def test_kfold_stratified_and_deterministic():
    y = np.array([0] * 60 + [1] * 40)
    folds = kfold_split(100, 5, y, seed=3)
    for _, val in folds:
        assert abs((y[val] == 0).sum() - 12) <= 1
    again = kfold_split(100, 5, y, seed=3)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))
    with pytest.raises(TooFewSamples):
        kfold_split(3, 5, [0, 1, 0], seed=0)


def test_cv_separable_and_constant(separable_2d):
    X, y = separable_2d
    res = cross_val_score("dt", {"max_depth": 3}, X, y, k=5, seed=0)
    assert res.mean == 1.0 and res.n_fits == 5
    const = cross_val_score("dt", {}, np.ones((60, 3)), np.array([0, 1] * 30), k=5, seed=0)
    assert 0.35 <= const.mean <= 0.65


def test_search_budget_and_single_config(separable_2d):
    X, y = separable_2d
    space = SearchSpace.default()
    res = randomized_search("dt", space, X, y, n_iter=3, k=4, seed=2)
    assert res.n_fits == 12 and len(res.results) == 3
    one = randomized_search("dt", space, X, y, n_iter=1, k=4, seed=2)
    assert one.best is one.results[0]


def test_search_finds_known_good_among_junk(separable_2d):
    X, y = separable_2d
    space = SearchSpace({"dt": [("max_depth", Choice((0, 0, 0, 3))),
                                ("min_samples_split", IntRange(2, 2))]})
    res = randomized_search("dt", space, X, y, n_iter=12, k=4, seed=0)
    assert res.best_params["max_depth"] == 3 and res.best.mean == 1.0


def test_search_space_requires_hyperparameters():
    with pytest.raises(ValueError):
        SearchSpace({"rf": [("max_depth", IntRange(1, 3))]})


def test_combinations():
    assert len(family_subsets()) == 7 and len(ALL_COMBINATIONS) == 14
    c = FeatureSetCombination.parse("dif,gts", "retained")
    assert c.label == "GTS+DIF" and c.slug == "gts_dif_retained"


def _full_matrix(n=40):
    gen = np.random.default_rng(0)
    series = [make_series(gen.uniform(0, 100, 24), f"c{i:03d}", i % 2) for i in range(n)]
    return extract_all(series), np.array([s.label for s in series])


def test_slice_algebra():
    m, _ = _full_matrix(6)
    avg = slice_columns(m, {Family.AVG})
    assert avg.shape[1] == 23
    assert slice_columns(m, {Family.DIF}).shape[1] == 59
    assert slice_columns(m, set(Family)).column_names == m.column_names
    ad = slice_columns(m, {Family.AVG, Family.DIF})
    assert ad.column_names == avg.column_names + slice_columns(m, {Family.DIF}).column_names
    assert slice_columns(ad, {Family.AVG, Family.DIF}).column_names == ad.column_names
    sliced, table = slice_feature_sets(m, FeatureSetCombination({Family.AVG}, "all"))
    assert table is None and sliced.shape[1] == 23


def _signal_matrix(n=60):
    gen = np.random.default_rng(1)
    y = np.array([0, 1] * (n // 2))
    cols = [FeatureName(Family.GTS, "g"), FeatureName(Family.AVG, "a"),
            FeatureName(Family.DIF, "d")]
    X = np.column_stack([y + gen.normal(scale=0.3, size=n), gen.normal(size=n),
                         np.full(n, 2.0)])
    ids = [f"c{i:03d}" for i in range(n)]
    return FeatureMatrix(ids, cols, X), TargetVector(ids, y)


def test_benchmark_grid_and_report():
    m, t = _signal_matrix()
    report = run_benchmark_on_matrix(m, t, q=0.05, k=3, n_iter=2, seed=5,
                                     classifiers=["dt", "lsvm"])
    assert len(report.cells) == 2 * 14
    for cell in report.cells.values():
        assert cell is None or 0.0 <= cell.mean <= 1.0
    # the DIF column is constant, so its retained variant is empty
    assert report.cells[("dt", "dif_retained")] is None
    md = render_report(report, "markdown")
    table_rows = [line for line in md.splitlines() if line.startswith("| DT") or line.startswith("| LSVM")]
    assert sum(r.count("**") for r in table_rows) == 2 and "n/a" in md
    col_best = report.column_best()
    filled = {slug for (_, slug), cell in report.cells.items() if cell is not None}
    assert set(col_best) == filled and "avg_retained" not in filled
    rows = list(csv.reader(io.StringIO(render_report(report, "csv")), delimiter=";"))
    assert len(rows) == 1 + 28
    marks = {}
    for r in rows[1:]:
        marks.setdefault((r[1], r[2]), 0)
        marks[(r[1], r[2])] += int(r[6])
    assert sorted(set(marks.values())) == [0, 1]
    assert report.feature_counts == {"gts": {"features": 1, "retained": 1},
                                     "avg": {"features": 1, "retained": 0},
                                     "dif": {"features": 1, "retained": 0}}
    again = run_benchmark_on_matrix(m, t, q=0.05, k=3, n_iter=2, seed=5, classifiers=["dt", "lsvm"])
    assert render_report(again, "csv") == render_report(report, "csv")


def test_benchmark_parallel_identical():
    m, t = _signal_matrix()
    kw = dict(q=0.05, k=3, n_iter=3, seed=2, classifiers=["rf"],
              combinations=ALL_COMBINATIONS[:4])
    a = run_benchmark_on_matrix(m, t, workers=1, **kw)
    b = run_benchmark_on_matrix(m, t, workers=3, **kw)
    assert render_report(a, "markdown") == render_report(b, "markdown")
    assert render_report(a, "csv") == render_report(b, "csv")


def test_strict_selection_runs():
    m, t = _signal_matrix()
    combo = [FeatureSetCombination.parse("gts+avg+dif", "retained")]
    r = run_benchmark_on_matrix(m, t, k=3, n_iter=2, seed=1, classifiers=["dt"],
                                combinations=combo, strict_selection=True)
    assert r.cells[("dt", combo[0].slug)].mean > 0.8
