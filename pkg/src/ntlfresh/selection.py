"""Feature relevance tests against a binary target and Benjamini-Hochberg
false-discovery-rate control."""
from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from .core import FeatureMatrix, FeatureName, NtlError, TargetVector, parse_feature_name

P_FLOOR = sys.float_info.min
FISHER_SLACK = 1.0 + 1e-7


class DegenerateMargins(NtlError, ValueError):
    pass


class EmptySample(NtlError, ValueError):
    pass


class SingleClassTarget(NtlError, ValueError):
    pass


def is_binary_feature(values) -> bool:
    return np.unique(np.asarray(values)).shape[0] == 2


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_exact_p(a: int, b: int, c: int, d: int) -> float:
    """Two-sided Fisher exact p for the table ``[[a, b], [c, d]]``.

    Sums the hypergeometric probabilities of every table with the same
    margins that is at most as likely as the observed one.
    """
    if min(a, b, c, d) < 0:
        raise ValueError("contingency counts must be non-negative")
    row1, row2, col1 = a + b, c + d, a + c
    n = row1 + row2
    if row1 == 0 or row2 == 0 or col1 == 0 or col1 == n:
        raise DegenerateMargins(f"zero margin in table {[[a, b], [c, d]]}")
    lo, hi = max(0, col1 - row2), min(row1, col1)
    xs = range(lo, hi + 1)
    logp = np.array([_log_comb(row1, x) + _log_comb(row2, col1 - x) for x in xs])
    rel = np.exp(logp - logp.max())
    observed = rel[a - lo]
    p = rel[rel <= observed * FISHER_SLACK].sum() / rel.sum()
    return float(min(1.0, p))


def ks_statistic(sample_a, sample_b) -> float:
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise EmptySample("KS test needs two non-empty samples")
    support = np.concatenate([a, b])
    fa = np.searchsorted(a, support, side="right") / a.size
    fb = np.searchsorted(b, support, side="right") / b.size
    return float(np.abs(fa - fb).max())


def kolmogorov_sf(lam: float) -> float:
    """``2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lam^2)``, clamped to (0, 1]."""
    if lam < 0.2:
        return 1.0
    total, sign = 0.0, 1.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += sign * term
        sign = -sign
        if term < 1e-17 * max(total, 1e-300):
            break
    return float(min(1.0, max(P_FLOOR, 2.0 * total)))


def ks_two_sample(sample_a, sample_b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value (effective size
    ``na*nb/(na+nb)`` with the usual small-sample correction)."""
    D = ks_statistic(sample_a, sample_b)
    na, nb = len(sample_a), len(sample_b)
    if D == 0.0:
        return 0.0, 1.0
    ne = na * nb / (na + nb)
    root = math.sqrt(ne)
    return D, kolmogorov_sf((root + 0.12 + 0.11 / root) * D)


def benjamini_hochberg(p_values, q: float) -> np.ndarray:
    """Boolean mask of rejected nulls (retained features) at FDR level ``q``."""
    p = np.asarray(p_values, dtype=np.float64)
    if not 0.0 < q < 1.0:
        raise ValueError(f"FDR level must lie in (0, 1), got {q}")
    m = p.shape[0]
    if m == 0:
        return np.zeros(0, dtype=bool)
    ordered = np.sort(p)
    ranks = np.arange(1, m + 1)
    below = np.nonzero(ordered <= ranks * q / m)[0]
    if below.size == 0:
        return np.zeros(m, dtype=bool)
    return p <= ordered[below[-1]]


@dataclass
class PValueTable:
    features: list[FeatureName]
    tests: list[str]
    p_values: np.ndarray
    q: float
    retained: np.ndarray

    def __len__(self):
        return len(self.features)

    def retained_names(self) -> list[str]:
        return [str(f) for f, keep in zip(self.features, self.retained) if keep]

    def save(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=";", lineterminator="\n")
            w.writerow(["feature", "test", "p_value", "retained"])
            for f, t, p, r in zip(self.features, self.tests, self.p_values, self.retained):
                w.writerow([str(f), t, repr(float(p)), int(bool(r))])

    @classmethod
    def load(cls, path, q: float) -> "PValueTable":
        features, tests, ps, kept = [], [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=";")
            if next(reader, None) != ["feature", "test", "p_value", "retained"]:
                raise ValueError(f"{path}: not a p-value table")
            for name, test, p, r in reader:
                features.append(parse_feature_name(name))
                tests.append(test)
                ps.append(float(p))
                kept.append(r == "1")
        return cls(features, tests, np.array(ps), q, np.array(kept, dtype=bool))


def _column_p_value(col: np.ndarray, y: np.ndarray) -> tuple[str, float]:
    levels = np.unique(col)
    if levels.shape[0] == 2:
        high = col == levels[1]
        pos = y == 1
        a = int(np.sum(~high & ~pos))
        b = int(np.sum(~high & pos))
        c = int(np.sum(high & ~pos))
        d = int(np.sum(high & pos))
        return "fisher", fisher_exact_p(a, b, c, d)
    if levels.shape[0] < 2:
        return "ks", 1.0
    return "ks", ks_two_sample(col[y == 0], col[y == 1])[1]


def feature_p_values(matrix: FeatureMatrix, target, q: float = 0.05) -> PValueTable:
    """Per-column p-values: Fisher for two-valued columns, KS otherwise,
    ``p = 1`` for constants. ``retained`` is filled by BH at level ``q``."""
    y = np.asarray(getattr(target, "labels", target)).astype(np.int64)
    if isinstance(target, TargetVector) and not target.aligned_with(matrix):
        raise ValueError("target and feature matrix rows are not aligned")
    if y.shape[0] != matrix.values.shape[0]:
        raise ValueError("target length differs from the number of matrix rows")
    if np.unique(y).shape[0] < 2:
        raise SingleClassTarget("relevance tests need both target classes")
    tests, ps = column_p_values(matrix.values, y)
    return PValueTable(list(matrix.columns), tests, ps, q, benjamini_hochberg(ps, q))


def column_p_values(X, y) -> tuple[list[str], np.ndarray]:
    """Test kinds and p-values for every column of a plain array."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    tests, ps = [], []
    for j in range(X.shape[1]):
        kind, p = _column_p_value(X[:, j], y)
        tests.append(kind)
        ps.append(p)
    return tests, np.asarray(ps, dtype=np.float64)


class TrainingRowSelector:
    """Picklable ``(X_train, y_train) -> retained column indices`` for
    selection inside each CV fold."""

    def __init__(self, q: float):
        self.q = q

    def __call__(self, X, y) -> np.ndarray:
        if np.unique(y).shape[0] < 2:
            raise SingleClassTarget("relevance tests need both target classes")
        _, ps = column_p_values(X, y)
        return np.nonzero(benjamini_hochberg(ps, self.q))[0]


def select_features(matrix: FeatureMatrix, target, q: float = 0.05):
    """Returns ``(retained matrix, full p-value table)``; column order kept."""
    table = feature_p_values(matrix, target, q)
    return matrix.select_columns(np.nonzero(table.retained)[0]), table
