"""Shared domain types, feature naming and series validation."""
from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class NtlError(Exception):
    """Base class for data errors surfaced to the CLI (exit code 1)."""


class MalformedName(NtlError, ValueError):
    pass


class EmptyResult(NtlError):
    pass


class Family(str, enum.Enum):
    GTS = "gts"
    AVG = "avg"
    DIF = "dif"

    @classmethod
    def parse(cls, text: str) -> "Family":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise MalformedName(f"unknown feature family {text!r}") from None


FAMILY_ORDER = (Family.GTS, Family.AVG, Family.DIF)

SEP = "__"


@dataclass(frozen=True)
class FeatureName:
    family: Family
    calculator: str
    params: tuple[tuple[str, object], ...] = ()

    def __str__(self) -> str:
        return format_feature_name(self)


def _format_value(v: object) -> str:
    text = repr(v) if isinstance(v, float) else str(v)
    if not text or SEP in text:
        raise MalformedName(f"invalid parameter value {v!r}")
    return text


def _parse_value(text: str) -> object:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def format_feature_name(name: FeatureName) -> str:
    """Canonical string ``family__calculator__key_value...``."""
    parts = [name.family.value, name.calculator]
    for key, value in name.params:
        if not key or SEP in key or "_" in key:
            raise MalformedName(f"invalid parameter key {key!r}")
        parts.append(f"{key}_{_format_value(value)}")
    return SEP.join(parts)


def parse_feature_name(text: str) -> FeatureName:
    parts = text.split(SEP)
    if len(parts) < 2 or not parts[0] or not parts[1]:
        raise MalformedName(f"feature name needs family and calculator: {text!r}")
    family = Family.parse(parts[0])
    params = []
    for chunk in parts[2:]:
        key, sep, value = chunk.partition("_")
        if not sep or not key or value == "":
            raise MalformedName(f"bad parameter segment {chunk!r} in {text!r}")
        params.append((key, _parse_value(value)))
    return FeatureName(family, parts[1], tuple(params))


@dataclass(frozen=True)
class ConsumptionRecord:
    customer_id: str
    reading_date: dt.date
    kwh_measured: float
    kwh_billed: float


@dataclass(frozen=True)
class InspectionRecord:
    customer_id: str
    inspection_date: dt.date
    ntl_found: int


@dataclass(frozen=True)
class CustomerSeries:
    customer_id: str
    consumptions: tuple[float, ...]
    reading_dates: tuple[dt.date, ...]
    label: int

    def __len__(self) -> int:
        return len(self.consumptions)


class Rejection(str, enum.Enum):
    WRONG_LENGTH = "WrongLength"
    GAP_IN_MONTHS = "GapInMonths"
    NON_MONOTONE_DATES = "NonMonotoneDates"
    ALL_ZERO = "AllZero"
    NO_READINGS = "NoReadingsBeforeInspection"


def month_index(d: dt.date) -> int:
    return d.year * 12 + (d.month - 1)


def validate_customer_series(series: CustomerSeries, expected_length: int) -> Rejection | None:
    """Return ``None`` if the series is usable, else the reason it is not.

    Months are compared on (year, month) only; the day of month is free.
    """
    dates = series.reading_dates
    if len(series.consumptions) != expected_length or len(dates) != expected_length:
        return Rejection.WRONG_LENGTH
    for a, b in zip(dates, dates[1:]):
        if b <= a:
            return Rejection.NON_MONOTONE_DATES
    for a, b in zip(dates, dates[1:]):
        if month_index(b) - month_index(a) != 1:
            return Rejection.GAP_IN_MONTHS
    return None


@dataclass
class FeatureMatrix:
    """Dense feature table with family-tagged column names.

    ``imputed`` counts, per column, how many rows had an undefined statistic
    replaced by 0.
    """

    customer_ids: list[str]
    columns: list[FeatureName]
    values: np.ndarray
    imputed: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(
            len(self.customer_ids), len(self.columns))
        names = self.column_names
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature columns")

    @property
    def column_names(self) -> list[str]:
        return [format_feature_name(c) for c in self.columns]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def select_columns(self, indices: Sequence[int]) -> "FeatureMatrix":
        indices = list(indices)
        cols = [self.columns[i] for i in indices]
        keep = {format_feature_name(c) for c in cols}
        return FeatureMatrix(list(self.customer_ids), cols, self.values[:, indices],
                             {k: v for k, v in self.imputed.items() if k in keep})

    def family_counts(self) -> dict[str, int]:
        counts = {f.value: 0 for f in FAMILY_ORDER}
        for c in self.columns:
            counts[c.family.value] += 1
        return counts


@dataclass(frozen=True)
class TargetVector:
    customer_ids: list[str]
    labels: np.ndarray

    def aligned_with(self, matrix: FeatureMatrix) -> bool:
        return list(self.customer_ids) == list(matrix.customer_ids)
