"""Feature calculators: generic time-series statistics (GTS), daily averages
(AVG) and the NTL difference features (DIF).

Every calculator works on a 2-D block of series (rows = customers) so that
``extract_all`` is vectorised; the per-series functions are thin wrappers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (FAMILY_ORDER, CustomerSeries, EmptyResult, Family, FeatureMatrix,
                   FeatureName, NtlError, parse_feature_name)

FIXED_INTERVAL_WINDOWS = (3, 6, 12)
YEAR = 12


class SeriesTooShort(NtlError):
    pass


class ZeroDayGap(NtlError):
    pass


@dataclass(frozen=True)
class ExtractionConfig:
    families: tuple[Family, ...] = FAMILY_ORDER
    autocorrelation_lags: tuple[int, ...] = (1, 2, 3, 6, 12)
    fft_coefficients: tuple[int, ...] = (0, 1, 2, 3)
    fft_parts: tuple[str, ...] = ("real", "imag", "abs")
    symmetry_r: tuple[float, ...] = (0.05, 0.25, 0.5)

    def __post_init__(self):
        fams = tuple(Family.parse(f) if isinstance(f, str) else f for f in self.families)
        if not fams:
            raise ValueError("at least one feature family must be enabled")
        # canonical order, duplicates removed
        object.__setattr__(self, "families", tuple(f for f in FAMILY_ORDER if f in fams))
        for part in self.fft_parts:
            if part not in ("real", "imag", "abs"):
                raise ValueError(f"unknown fft part {part!r}")

    @classmethod
    def from_names(cls, names, **kwargs) -> "ExtractionConfig":
        return cls(families=tuple(Family.parse(n) for n in names), **kwargs)


@dataclass
class Block:
    """Columns produced by one calculator over a set of rows."""

    names: list[FeatureName]
    values: np.ndarray  # rows x len(names)
    imputed: np.ndarray = field(default=None)  # per-column imputation counts

    def __post_init__(self):
        if self.imputed is None:
            self.imputed = np.zeros(len(self.names), dtype=np.int64)


def _require(C: np.ndarray, n_min: int, what: str):
    if C.shape[1] < n_min:
        raise SeriesTooShort(f"{what} needs at least {n_min} months, got {C.shape[1]}")


# ---------------------------------------------------------------- DIF

def fixed_interval_block(C: np.ndarray) -> Block:
    """``C_d - mean(C_{d-K} .. C_{d-1})`` for K in (3, 6, 12), d in [12, N-1]."""
    _require(C, YEAR + 1, "fixed_interval")
    n = C.shape[1]
    names, cols = [], []
    for K in FIXED_INTERVAL_WINDOWS:
        for d in range(YEAR, n):
            names.append(FeatureName(Family.DIF, "fixed_interval", (("K", K), ("d", d))))
            cols.append(C[:, d] - C[:, d - K:d].sum(axis=1) / K)
    return Block(names, np.column_stack(cols))


def intra_year_block(C: np.ndarray) -> Block:
    """``C_d - C_{d-12}`` for d in [12, N-1]."""
    _require(C, YEAR + 1, "intra_year")
    n = C.shape[1]
    names = [FeatureName(Family.DIF, "intra_year", (("d", d),)) for d in range(YEAR, n)]
    return Block(names, C[:, YEAR:] - C[:, :n - YEAR])


def intra_year_seasonal_block(C: np.ndarray) -> Block:
    """``C_d - mean(C_{d-13}, C_{d-12}, C_{d-11})`` for d in [13, N-1]."""
    _require(C, YEAR + 2, "intra_year_seasonal")
    n = C.shape[1]
    names, cols = [], []
    for d in range(YEAR + 1, n):
        names.append(FeatureName(Family.DIF, "intra_year_seasonal", (("d", d),)))
        cols.append(C[:, d] - C[:, d - YEAR - 1:d - YEAR + 2].sum(axis=1) / 3)
    return Block(names, np.column_stack(cols))


# ---------------------------------------------------------------- AVG

def day_gaps(dates_rows) -> np.ndarray:
    """Exact day counts between consecutive readings, one row per series."""
    gaps = np.array([[(b - a).days for a, b in zip(r, r[1:])] for r in dates_rows],
                    dtype=np.float64)
    if gaps.size and (gaps <= 0).any():
        raise ZeroDayGap("consecutive readings must be at least one day apart")
    return gaps


def daily_avg_block(C: np.ndarray, gaps: np.ndarray) -> Block:
    """``C_d / days(R_d - R_{d-1})`` for d in [1, N-1]."""
    _require(C, 2, "daily_avg")
    n = C.shape[1]
    names = [FeatureName(Family.AVG, "daily_avg", (("d", d),)) for d in range(1, n)]
    return Block(names, C[:, 1:] / gaps)


# ---------------------------------------------------------------- GTS

def _moments(C):
    mu = C.mean(axis=1)
    dev = C - mu[:, None]
    m2 = (dev ** 2).mean(axis=1)
    return mu, dev, m2


def gts_block(C: np.ndarray, config: ExtractionConfig = ExtractionConfig()) -> Block:
    """Generic statistics. Population moments throughout; undefined values
    (zero variance, zero range) are imputed as 0 and counted."""
    _require(C, 3, "gts")
    rows, n = C.shape
    mu, dev, m2 = _moments(C)
    flat = m2 <= 0.0
    safe_m2 = np.where(flat, 1.0, m2)
    med = np.median(C, axis=1)
    mx = C.max(axis=1)
    mn = C.min(axis=1)

    names, cols, imputed = [], [], []

    def add(calc, values, params=(), n_imputed=0):
        names.append(FeatureName(Family.GTS, calc, tuple(params)))
        cols.append(values)
        imputed.append(n_imputed)

    n_flat = int(flat.sum())
    add("maximum", mx)
    add("minimum", mn)
    add("mean", mu)
    add("median", med)
    add("variance", m2)
    add("standard_deviation", np.sqrt(m2))
    add("skewness", np.where(flat, 0.0, (dev ** 3).mean(axis=1) / safe_m2 ** 1.5), n_imputed=n_flat)
    add("kurtosis", np.where(flat, 0.0, (dev ** 4).mean(axis=1) / safe_m2 ** 2 - 3.0),
        n_imputed=n_flat)
    add("sum_values", C.sum(axis=1))
    add("abs_energy", (C * C).sum(axis=1))
    add("count_above_median", (C > med[:, None]).sum(axis=1).astype(np.float64))
    add("count_below_median", (C < med[:, None]).sum(axis=1).astype(np.float64))
    span = mx - mn
    no_span = span <= 0.0
    for r in config.symmetry_r:
        sym = (np.abs(mu - med) < r * span).astype(np.float64)
        add("symmetry_looking", np.where(no_span, 0.0, sym), (("r", r),), int(no_span.sum()))
    for lag in config.autocorrelation_lags:
        if lag >= n:
            add("autocorrelation", np.zeros(rows), (("lag", lag),), rows)
            continue
        ac = (dev[:, :n - lag] * dev[:, lag:]).sum(axis=1) / ((n - lag) * safe_m2)
        add("autocorrelation", np.where(flat, 0.0, ac), (("lag", lag),), n_flat)
    t = np.arange(n)
    for j in config.fft_coefficients:
        angle = 2.0 * math.pi * j * t / n
        # row-wise sums rather than a matrix product, so results do not depend
        # on how rows are batched across workers
        re = (C * np.cos(angle)).sum(axis=1)
        im = -(C * np.sin(angle)).sum(axis=1)
        parts = {"real": re, "imag": im, "abs": np.hypot(re, im)}
        for part in config.fft_parts:
            add("fft_coefficient", parts[part], (("coeff", j), ("part", part)))
    second = C[:, 2:] - 2.0 * C[:, 1:-1] + C[:, :-2]
    add("mean_second_derivative_central", second.sum(axis=1) / (2.0 * (n - 2)))
    return Block(names, np.column_stack(cols).reshape(rows, len(names)),
                 np.asarray(imputed, dtype=np.int64))


# ---------------------------------------------------------------- per-series API

def _as_output(block: Block) -> list[tuple[FeatureName, float]]:
    return [(name, float(v)) for name, v in zip(block.names, block.values[0])]


def _row(series: CustomerSeries) -> np.ndarray:
    return np.asarray(series.consumptions, dtype=np.float64)[None, :]


def fixed_interval_features(series: CustomerSeries):
    return _as_output(fixed_interval_block(_row(series)))


def intra_year_features(series: CustomerSeries):
    return _as_output(intra_year_block(_row(series)))


def intra_year_seasonal_features(series: CustomerSeries):
    return _as_output(intra_year_seasonal_block(_row(series)))


def daily_average_features(series: CustomerSeries):
    return _as_output(daily_avg_block(_row(series), day_gaps([series.reading_dates])))


def gts_features(series: CustomerSeries, config: ExtractionConfig = ExtractionConfig()):
    return _as_output(gts_block(_row(series), config))


# ---------------------------------------------------------------- whole dataset

def _extract_rows(args) -> list[Block]:
    C, dates, config = args
    blocks = []
    if Family.GTS in config.families:
        blocks.append(gts_block(C, config))
    if Family.AVG in config.families:
        blocks.append(daily_avg_block(C, day_gaps(dates)))
    if Family.DIF in config.families:
        blocks += [fixed_interval_block(C), intra_year_block(C), intra_year_seasonal_block(C)]
    return blocks


def extract_all(dataset, config: ExtractionConfig = ExtractionConfig(),
                workers: int = 1) -> FeatureMatrix:
    """Feature matrix over every series of ``dataset`` (a ``SeriesDataset`` or a
    list of ``CustomerSeries``), rows sorted by customer id."""
    series = sorted(getattr(dataset, "series", dataset), key=lambda s: s.customer_id)
    if not series:
        raise EmptyResult("cannot extract features from an empty dataset")
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ValueError(f"series lengths differ: {sorted(lengths)}")
    C = np.array([s.consumptions for s in series], dtype=np.float64)
    dates = [s.reading_dates for s in series]

    if workers > 1 and len(series) > workers:
        bounds = np.linspace(0, len(series), workers + 1).astype(int)
        jobs = [(C[a:b], dates[a:b], config) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_extract_rows, jobs))
        blocks = [Block(p[0].names, np.vstack([q[i].values for q in parts]),
                        np.sum([q[i].imputed for q in parts], axis=0))
                  for i, p in enumerate(zip(*parts))]
    else:
        blocks = _extract_rows((C, dates, config))
    names = [n for b in blocks for n in b.names]
    values = np.hstack([b.values for b in blocks])
    imputed = {}
    for b in blocks:
        for name, count in zip(b.names, b.imputed):
            if count:
                imputed[str(name)] = int(count)
    return FeatureMatrix([s.customer_id for s in series], names, values, imputed)


def save_feature_matrix(matrix: FeatureMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=";", lineterminator="\n")
        w.writerow(["customer_id"] + matrix.column_names)
        for cid, row in zip(matrix.customer_ids, matrix.values):
            w.writerow([cid] + [repr(float(v)) for v in row])


def load_feature_matrix(path) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=";")
        header = next(reader, None)
        if not header or header[0] != "customer_id":
            raise ValueError(f"{path}: not a feature matrix file")
        columns = [parse_feature_name(h) for h in header[1:]]
        ids, rows = [], []
        for row in reader:
            if len(row) != len(header):
                raise ValueError(f"{path}: ragged row for customer {row[:1]}")
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    values = np.array(rows, dtype=np.float64).reshape(len(ids), len(columns))
    return FeatureMatrix(ids, columns, values)
