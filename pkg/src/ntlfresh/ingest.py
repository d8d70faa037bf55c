"""Load meter readings and inspections, cut one consecutive window per
inspected customer, and persist the prepared dataset as semicolon CSV."""
from __future__ import annotations

import csv
import datetime as dt
import hashlib
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .core import (ConsumptionRecord, CustomerSeries, EmptyResult, InspectionRecord,
                   NtlError, Rejection, month_index, validate_customer_series)

logger = logging.getLogger(__name__)

CONSUMPTION_HEADER = ("customer_id", "reading_date", "kwh_measured", "kwh_billed")
INSPECTION_HEADER = ("customer_id", "inspection_date", "ntl_found")
COLUMNS = {"measured": "kwh_measured", "billed": "kwh_billed"}
MIN_LENGTH = 14


class FileUnreadable(NtlError):
    pass


class FileUnwritable(NtlError):
    pass


class HeaderMismatch(NtlError):
    pass


class SchemaMismatch(NtlError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    series_length: int = 24
    consumption_column: str = "measured"
    drop_all_zero: bool = False
    worker_count: int = 1

    def __post_init__(self):
        if self.series_length < MIN_LENGTH:
            raise ValueError(f"series_length must be >= {MIN_LENGTH}, got {self.series_length}")
        if self.consumption_column not in COLUMNS:
            raise ValueError(f"consumption_column must be one of {sorted(COLUMNS)}")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass
class RejectionStats:
    """Attrition bookkeeping.

    Row counts satisfy ``input == sum of every other row bucket``; customer
    counts are keyed by rejection reason.
    """

    rows: dict[str, int] = field(default_factory=lambda: dict.fromkeys(
        ("input", "unparseable", "uninspected", "duplicate_month", "outside_window",
         "rejected_series", "used"), 0))
    inspection_rows: dict[str, int] = field(default_factory=lambda: dict.fromkeys(
        ("input", "unparseable", "superseded", "used"), 0))
    customers: dict[str, int] = field(default_factory=dict)

    def conserved(self) -> bool:
        r = self.rows
        return r["input"] == sum(v for k, v in r.items() if k != "input")

    def as_dict(self) -> dict:
        return {"rows": dict(self.rows), "inspection_rows": dict(self.inspection_rows),
                "customers": dict(sorted(self.customers.items()))}


@dataclass
class SeriesDataset:
    series: list[CustomerSeries]
    config: PreprocessConfig | None = field(default=None, compare=False)
    digests: dict[str, str] = field(default_factory=dict, compare=False)
    stats: RejectionStats | None = field(default=None, compare=False)

    @property
    def length(self) -> int:
        return len(self.series[0]) if self.series else (
            self.config.series_length if self.config else 0)

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.series]

    @property
    def customer_ids(self) -> list[str]:
        return [s.customer_id for s in self.series]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_date(text: str) -> dt.date | None:
    try:
        return dt.date.fromisoformat(text.strip())
    except (ValueError, AttributeError):
        return None


def _parse_kwh(text: str | None) -> float | None:
    if text is None:
        return None
    try:
        v = float(text.strip())
    except ValueError:
        return None
    if not math.isfinite(v) or v < 0:
        return None
    return v


def _open_rows(path, required):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(fh, delimiter=";")
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in required if c not in header]
    if missing:
        fh.close()
        raise HeaderMismatch(f"{path}: missing columns {missing}")
    reader.fieldnames = header
    return fh, reader


def load_consumptions(path, column_choice: str = "measured"):
    """Read the consumption CSV.

    Rows whose date or selected kWh column cannot be parsed (or is negative)
    are dropped and counted. A bad value in the unselected column becomes NaN.
    Returns ``(records, dropped_count)``.
    """
    chosen = COLUMNS[column_choice]
    records, dropped = [], 0
    fh, reader = _open_rows(path, CONSUMPTION_HEADER)
    with fh:
        for row in reader:
            cid = (row.get("customer_id") or "").strip()
            date = _parse_date(row.get("reading_date") or "")
            values = {c: _parse_kwh(row.get(c)) for c in COLUMNS.values()}
            if not cid or date is None or values[chosen] is None:
                dropped += 1
                continue
            records.append(ConsumptionRecord(
                cid, date,
                values["kwh_measured"] if values["kwh_measured"] is not None else math.nan,
                values["kwh_billed"] if values["kwh_billed"] is not None else math.nan))
    return records, dropped


def load_inspections(path):
    """Read the inspection CSV; labels outside {0, 1} are dropped and counted."""
    records, dropped = [], 0
    fh, reader = _open_rows(path, INSPECTION_HEADER)
    with fh:
        for row in reader:
            cid = (row.get("customer_id") or "").strip()
            date = _parse_date(row.get("inspection_date") or "")
            label = (row.get("ntl_found") or "").strip()
            if not cid or date is None or label not in ("0", "1"):
                dropped += 1
                continue
            records.append(InspectionRecord(cid, date, int(label)))
    return records, dropped


def latest_inspection_per_customer(inspections) -> dict[str, InspectionRecord]:
    """Latest inspection per customer; on equal dates the later file row wins."""
    latest: dict[str, InspectionRecord] = {}
    for rec in inspections:
        cur = latest.get(rec.customer_id)
        if cur is None or rec.inspection_date >= cur.inspection_date:
            latest[rec.customer_id] = rec
    return latest


def _window_for_customer(args):
    """Cut and validate one customer's window.

    ``readings`` is a list of ``(file_order, date, kwh)``. Returns
    ``(series_or_None, reason_or_None, row_buckets)``.
    """
    cid, readings, inspection, n, drop_all_zero = args
    buckets = dict.fromkeys(("duplicate_month", "outside_window", "rejected_series", "used"), 0)
    before = [r for r in readings if r[1] <= inspection.inspection_date]
    buckets["outside_window"] += len(readings) - len(before)
    by_month: dict[int, tuple] = {}
    for rec in before:
        key = month_index(rec[1])
        cur = by_month.get(key)
        if cur is not None:
            buckets["duplicate_month"] += 1
            if (rec[1], rec[0]) < (cur[1], cur[0]):
                continue
        by_month[key] = rec
    eligible = sorted(by_month.values(), key=lambda r: r[1])
    if not eligible:
        return None, Rejection.NO_READINGS, buckets
    window = eligible[-n:]
    buckets["outside_window"] += len(eligible) - len(window)
    series = CustomerSeries(cid, tuple(r[2] for r in window), tuple(r[1] for r in window),
                            inspection.ntl_found)
    reason = validate_customer_series(series, n)
    if reason is None and drop_all_zero and all(c == 0 for c in series.consumptions):
        reason = Rejection.ALL_ZERO
    if reason is not None:
        buckets["rejected_series"] += len(window)
        return None, reason, buckets
    buckets["used"] += len(window)
    return series, None, buckets


def build_windows(consumptions, latest_inspections, config: PreprocessConfig,
                  stats: RejectionStats | None = None) -> SeriesDataset:
    """Match each inspected customer's readings to its latest inspection.

    The window is the ``N`` latest monthly readings dated on or before the
    inspection. ``stats`` is filled in place (a fresh one is created if None).
    """
    if stats is None:
        stats = RejectionStats()
        stats.rows["input"] = len(consumptions)
    column = COLUMNS[config.consumption_column]
    grouped: dict[str, list] = defaultdict(list)
    for order, rec in enumerate(consumptions):
        if rec.customer_id not in latest_inspections:
            stats.rows["uninspected"] += 1
            continue
        grouped[rec.customer_id].append((order, rec.reading_date, getattr(rec, column)))
    jobs = []
    for cid in sorted(latest_inspections):
        if cid not in grouped:
            stats.customers[Rejection.NO_READINGS.value] = (
                stats.customers.get(Rejection.NO_READINGS.value, 0) + 1)
            continue
        jobs.append((cid, grouped[cid], latest_inspections[cid], config.series_length,
                     config.drop_all_zero))

    if config.worker_count > 1 and len(jobs) > 1:
        chunk = max(1, len(jobs) // (config.worker_count * 4))
        with ProcessPoolExecutor(max_workers=config.worker_count) as pool:
            results = list(pool.map(_window_for_customer, jobs, chunksize=chunk))
    else:
        results = [_window_for_customer(j) for j in jobs]

    series = []
    for s, reason, buckets in results:
        for k, v in buckets.items():
            stats.rows[k] += v
        if reason is not None:
            stats.customers[reason.value] = stats.customers.get(reason.value, 0) + 1
        else:
            series.append(s)
    series.sort(key=lambda s: s.customer_id)
    stats.customers["accepted"] = len(series)
    if not series:
        raise EmptyResult("no customer series survived preprocessing")
    return SeriesDataset(series, config, stats=stats)


def preprocess(consumption_path, inspection_path, config: PreprocessConfig) -> SeriesDataset:
    """Full ingest: load both files, pick latest inspections, build windows."""
    stats = RejectionStats()
    records, dropped = load_consumptions(consumption_path, config.consumption_column)
    stats.rows["input"] = len(records) + dropped
    stats.rows["unparseable"] = dropped
    inspections, bad = load_inspections(inspection_path)
    latest = latest_inspection_per_customer(inspections)
    stats.inspection_rows.update(input=len(inspections) + bad, unparseable=bad,
                                 superseded=len(inspections) - len(latest), used=len(latest))
    dataset = build_windows(records, latest, config, stats)
    dataset.digests = {"consumptions": file_digest(consumption_path),
                       "inspections": file_digest(inspection_path)}
    logger.info("preprocess: %d series accepted, rejections %s",
                len(dataset.series), stats.customers)
    return dataset


def _dataset_header(n: int) -> list[str]:
    header = ["customer_id", "label"]
    for d in range(n):
        header += [f"date_{d}", f"c_{d}"]
    return header


def save_dataset(dataset: SeriesDataset, path) -> None:
    n = dataset.length
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=";", lineterminator="\n")
            w.writerow(_dataset_header(n))
            for s in dataset.series:
                row = [s.customer_id, str(s.label)]
                for date, c in zip(s.reading_dates, s.consumptions):
                    row += [date.isoformat(), repr(float(c))]
                w.writerow(row)
    except OSError as exc:
        raise FileUnwritable(f"cannot write {path}: {exc}") from exc


def load_dataset(path) -> SeriesDataset:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=";")
        header = next(reader, None)
        if not header or len(header) < 2 or (len(header) - 2) % 2:
            raise SchemaMismatch(f"{path}: malformed dataset header")
        n = (len(header) - 2) // 2
        if header != _dataset_header(n):
            raise SchemaMismatch(f"{path}: unexpected dataset header")
        series = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaMismatch(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                dates = tuple(dt.date.fromisoformat(row[2 + 2 * d]) for d in range(n))
                values = tuple(float(row[3 + 2 * d]) for d in range(n))
                label = int(row[1])
            except ValueError as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from exc
            series.append(CustomerSeries(row[0], values, dates, label))
    config = PreprocessConfig(series_length=n) if n >= MIN_LENGTH else None
    return SeriesDataset(series, config)
