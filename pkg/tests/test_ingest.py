import datetime as dt

import numpy as np
import pytest

from ntlfresh.core import EmptyResult, InspectionRecord, Rejection
from ntlfresh.ingest import (HeaderMismatch, PreprocessConfig, SchemaMismatch, SeriesDataset,
                             build_windows, latest_inspection_per_customer, load_consumptions,
                             load_dataset, load_inspections, preprocess, save_dataset)

from conftest import CONS_HEADER, INSP_HEADER, make_series, monthly_dates, write_csv


def _cons_rows(cid, n, start=(2015, 1), value=10.0):
    return [(cid, d.isoformat(), value, value) for d in monthly_dates(n, start)]


def test_load_consumptions_drops_bad_rows(tmp_path):
    rows = _cons_rows("A", 3) + [("A", "??", 1.0, 1.0)]
    recs, dropped = load_consumptions(write_csv(tmp_path / "c.csv", CONS_HEADER, rows))
    assert len(recs) == 3 and dropped == 1


def test_load_consumptions_header_only_and_missing_column(tmp_path):
    recs, dropped = load_consumptions(write_csv(tmp_path / "c.csv", CONS_HEADER, []))
    assert recs == [] and dropped == 0
    with pytest.raises(HeaderMismatch):
        load_consumptions(write_csv(tmp_path / "d.csv", CONS_HEADER[:3], []))


def test_unselected_bad_column_becomes_nan(tmp_path):
    path = write_csv(tmp_path / "c.csv", CONS_HEADER, [("A", "2015-01-01", 5.0, "x")])
    (rec,), dropped = load_consumptions(path, "measured")
    assert dropped == 0 and np.isnan(rec.kwh_billed)
    assert load_consumptions(path, "billed") == ([], 1)
    neg = write_csv(tmp_path / "n.csv", CONS_HEADER, [("A", "2015-01-01", -1.0, 2.0)])
    assert load_consumptions(neg)[1] == 1


def test_load_inspections(tmp_path):
    path = write_csv(tmp_path / "i.csv", INSP_HEADER,
                     [("A", "2015-01-01", 0), ("B", "2015-01-01", 1), ("C", "2015-01-01", 1),
                      ("D", "2015-01-01", 7), ("A", "2015-01-01", 0)])
    recs, dropped = load_inspections(path)
    assert len(recs) == 4 and dropped == 1


def test_latest_inspection():
    A1 = InspectionRecord("A", dt.date(2015, 1, 3), 0)
    A2 = InspectionRecord("A", dt.date(2016, 3, 3), 1)
    assert latest_inspection_per_customer([A2, A1])["A"] == A2
    assert latest_inspection_per_customer([A1]) == {"A": A1}
    tie0 = InspectionRecord("B", dt.date(2016, 1, 1), 0)
    tie1 = InspectionRecord("B", dt.date(2016, 1, 1), 1)
    assert latest_inspection_per_customer([tie0, tie1])["B"] is tie1
    assert latest_inspection_per_customer([tie1, tie0])["B"] is tie0


def _records(tmp_path, rows):
    return load_consumptions(write_csv(tmp_path / "c.csv", CONS_HEADER, rows))[0]


def test_build_windows_examples(tmp_path):
    rows = _cons_rows("A", 24) + _cons_rows("Z", 24, value=0.0)
    gap = _cons_rows("G", 25)
    del gap[10]
    rows += gap
    recs = _records(tmp_path, rows)
    when = dt.date(2017, 1, 20)
    insp = {c: InspectionRecord(c, when, 1) for c in "AGZ"}
    ds = build_windows(recs, insp, PreprocessConfig(drop_all_zero=True))
    assert [s.customer_id for s in ds.series] == ["A"]
    assert ds.stats.customers == {Rejection.GAP_IN_MONTHS.value: 1, Rejection.ALL_ZERO.value: 1,
                                  "accepted": 1}
    assert ds.stats.conserved()
    ds2 = build_windows(recs, insp, PreprocessConfig(drop_all_zero=False))
    assert [s.customer_id for s in ds2.series] == ["A", "Z"]


def test_window_takes_latest_months_before_inspection(tmp_path):
    recs = _records(tmp_path, _cons_rows("A", 30))
    insp = {"A": InspectionRecord("A", monthly_dates(30)[25], 0)}
    (s,) = build_windows(recs, insp, PreprocessConfig(series_length=24)).series
    assert s.reading_dates == monthly_dates(30)[2:26]
    with pytest.raises(EmptyResult):
        build_windows(recs, {"A": InspectionRecord("A", dt.date(2000, 1, 1), 0)},
                      PreprocessConfig())


def test_duplicate_month_keeps_latest_reading(tmp_path):
    rows = _cons_rows("A", 24)
    rows.append(("A", "2015-03-25", 99.0, 99.0))
    recs = _records(tmp_path, rows)
    insp = {"A": InspectionRecord("A", dt.date(2017, 1, 20), 0)}
    ds = build_windows(recs, insp, PreprocessConfig())
    (s,) = ds.series
    assert s.consumptions[2] == 99.0 and s.reading_dates[2] == dt.date(2015, 3, 25)
    assert ds.stats.rows["duplicate_month"] == 1 and ds.stats.conserved()


def test_dataset_round_trip(tmp_path):
    ds = SeriesDataset([make_series([1.5, 2.25, 0.1] * 5, "A", 1), make_series(range(15), "B", 0)])
    save_dataset(ds, tmp_path / "d.csv")
    assert load_dataset(tmp_path / "d.csv") == ds
    save_dataset(SeriesDataset([]), tmp_path / "e.csv")
    assert load_dataset(tmp_path / "e.csv").series == []


def test_load_dataset_wrong_column_count(tmp_path):
    ds = SeriesDataset([make_series(range(15), "B", 0)])
    save_dataset(ds, tmp_path / "d.csv")
    text = (tmp_path / "d.csv").read_text().rstrip("\n") + ";extra\n"
    (tmp_path / "d.csv").write_text(text)
    with pytest.raises(SchemaMismatch):
        load_dataset(tmp_path / "d.csv")


def test_preprocess_records_digests(tmp_path):
    c = write_csv(tmp_path / "c.csv", CONS_HEADER, _cons_rows("A", 24))
    i = write_csv(tmp_path / "i.csv", INSP_HEADER, [("A", "2017-01-20", 1)])
    ds = preprocess(c, i, PreprocessConfig())
    assert set(ds.digests) == {"consumptions", "inspections"}
    assert ds.stats.rows["used"] == 24


def test_config_validation():
    with pytest.raises(ValueError):
        PreprocessConfig(series_length=5)
    with pytest.raises(ValueError):
        PreprocessConfig(consumption_column="estimated")
