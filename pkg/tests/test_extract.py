import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ntlfresh.core import CustomerSeries, EmptyResult, Family
from ntlfresh.extract import (ExtractionConfig, SeriesTooShort, ZeroDayGap,
                              daily_average_features, extract_all, fixed_interval_features,
                              gts_features, intra_year_features, intra_year_seasonal_features,
                              load_feature_matrix, save_feature_matrix)

from conftest import make_series


def as_dict(out):
    return {str(k): v for k, v in out}


def test_fixed_interval():
    assert len(fixed_interval_features(make_series([5] * 24))) == 36
    assert all(v == 0 for _, v in fixed_interval_features(make_series([5] * 24)))
    f = as_dict(fixed_interval_features(make_series(range(15))))
    assert f["dif__fixed_interval__K_3__d_12"] == 2.0
    with pytest.raises(SeriesTooShort):
        fixed_interval_features(make_series(range(12)))


def test_intra_year():
    out = intra_year_features(make_series(range(24)))
    assert len(out) == 12 and all(v == 12 for _, v in out)
    assert all(v == 0 for _, v in intra_year_features(make_series([7] * 24)))


def test_intra_year_seasonal():
    out = intra_year_seasonal_features(make_series(range(24)))
    assert len(out) == 11
    assert as_dict(out)["dif__intra_year_seasonal__d_13"] == 12.0
    assert all(v == 0 for _, v in intra_year_seasonal_features(make_series([7] * 24)))


def test_daily_average():
    dates = tuple(dt.date(2015, 1, 1) + dt.timedelta(days=30 * k) for k in range(24))
    s = CustomerSeries("A", (30.0,) * 24, dates, 0)
    out = daily_average_features(s)
    assert len(out) == 23 and all(v == 1.0 for _, v in out)
    z = CustomerSeries("A", (0.0,) * 24, dates, 0)
    assert all(v == 0 for _, v in daily_average_features(z))
    dup = CustomerSeries("A", (1.0,) * 3, (dates[0], dates[0], dates[1]), 0)
    with pytest.raises(ZeroDayGap):
        daily_average_features(dup)


values = st.lists(st.floats(0, 1e4, allow_nan=False), min_size=14, max_size=30)


@given(values)
@settings(max_examples=60, deadline=None)
def test_dif_against_loop_oracle(vals):
    C = [float(v) for v in vals]
    n = len(C)
    f = as_dict(fixed_interval_features(make_series(C)))
    for K in (3, 6, 12):
        for d in range(12, n):
            expected = C[d] - sum(C[d - K:d]) / K
            assert f[f"dif__fixed_interval__K_{K}__d_{d}"] == pytest.approx(expected, abs=1e-9)
    g = as_dict(intra_year_features(make_series(C)))
    for d in range(12, n):
        assert g[f"dif__intra_year__d_{d}"] == pytest.approx(C[d] - C[d - 12], abs=1e-12)
    h = as_dict(intra_year_seasonal_features(make_series(C)))
    for d in range(13, n):
        expected = C[d] - (C[d - 13] + C[d - 12] + C[d - 11]) / 3
        assert h[f"dif__intra_year_seasonal__d_{d}"] == pytest.approx(expected, abs=1e-9)


def test_gts_spot_values():
    g = as_dict(gts_features(make_series([1, 2, 3])))
    assert g["gts__abs_energy"] == 14.0
    alt = as_dict(gts_features(make_series([1, -1] * 12)))
    assert alt["gts__autocorrelation__lag_1"] == pytest.approx(-1.0, abs=1e-12)
    const = as_dict(gts_features(make_series([4.0] * 24)))
    assert const["gts__fft_coefficient__coeff_0__part_real"] == 96.0
    for j in (1, 2, 3):
        for part in ("real", "imag", "abs"):
            assert abs(const[f"gts__fft_coefficient__coeff_{j}__part_{part}"]) < 1e-10
    lin = as_dict(gts_features(make_series([3 + 2 * d for d in range(24)])))
    assert lin["gts__mean_second_derivative_central"] == 0.0


@given(values)
@settings(max_examples=60, deadline=None)
def test_gts_against_numpy_scipy(vals):
    from scipy import stats

    C = np.array(vals, dtype=np.float64)
    g = as_dict(gts_features(make_series(C)))
    assert len(g) == 33
    spread = C.std() > 1e-6 * max(1.0, np.abs(C).max())
    assert g["gts__variance"] == pytest.approx(C.var(), rel=1e-9, abs=1e-9)
    assert g["gts__median"] == np.median(C)
    if spread:
        assert g["gts__skewness"] == pytest.approx(stats.skew(C), rel=1e-6, abs=1e-6)
        assert g["gts__kurtosis"] == pytest.approx(stats.kurtosis(C), rel=1e-6, abs=1e-6)
        dev = C - C.mean()
        for lag in (1, 2, 3, 6, 12):
            direct = sum(dev[t] * dev[t + lag] for t in range(len(C) - lag)) / (
                (len(C) - lag) * C.var())
            assert g[f"gts__autocorrelation__lag_{lag}"] == pytest.approx(direct, abs=1e-9)
    F = np.fft.fft(C)
    scale = max(1.0, np.abs(C).sum())
    for j in range(4):
        assert g[f"gts__fft_coefficient__coeff_{j}__part_real"] == pytest.approx(F[j].real, abs=1e-9 * scale)
        assert g[f"gts__fft_coefficient__coeff_{j}__part_imag"] == pytest.approx(F[j].imag, abs=1e-9 * scale)
        assert g[f"gts__fft_coefficient__coeff_{j}__part_abs"] == pytest.approx(abs(F[j]), abs=1e-9 * scale)


def test_constant_series_imputation_counted():
    m = extract_all([make_series([2.0] * 24, "A"), make_series(range(24), "B")],
                    ExtractionConfig.from_names(["gts"]))
    assert m.imputed["gts__skewness"] == 1
    assert m.imputed["gts__autocorrelation__lag_1"] == 1
    assert np.isfinite(m.values).all()


def test_extract_all_counts_and_order():
    ds = [make_series(np.arange(24) * (i + 1), f"c{i}", i % 2) for i in range(3)][::-1]
    m = extract_all(ds)
    assert m.customer_ids == ["c0", "c1", "c2"]
    assert m.family_counts() == {"gts": 33, "avg": 23, "dif": 59}
    fams = [c.family for c in m.columns]
    assert fams == sorted(fams, key=[Family.GTS, Family.AVG, Family.DIF].index)
    m2 = extract_all(ds, ExtractionConfig.from_names(["dif", "avg"]))
    assert m2.shape == (3, 82)
    one = extract_all([make_series([5.0] * 24)], ExtractionConfig.from_names(["dif"]))
    assert one.shape == (1, 59) and not one.values.any()
    with pytest.raises(EmptyResult):
        extract_all([])


def test_parallel_extraction_identical():
    gen = np.random.default_rng(1)
    ds = [make_series(gen.uniform(0, 100, 24), f"c{i:03d}") for i in range(40)]
    a, b = extract_all(ds, workers=1), extract_all(ds, workers=3)
    assert a.column_names == b.column_names
    assert np.array_equal(a.values, b.values)


def test_matrix_round_trip(tmp_path):
    gen = np.random.default_rng(2)
    m = extract_all([make_series(gen.uniform(0, 100, 24), f"c{i}") for i in range(5)])
    save_feature_matrix(m, tmp_path / "f.csv")
    back = load_feature_matrix(tmp_path / "f.csv")
    assert back.column_names == m.column_names
    assert np.array_equal(back.values, m.values)
